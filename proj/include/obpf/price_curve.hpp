#pragma once

#include <vector>

#include "obpf/clearing.hpp"
#include "obpf/metrics.hpp"
#include "obpf/partition.hpp"

namespace obpf {

// An order book reduced to scheme classes: combined supply-plus-demand
// volume per class, and the price-inelastic part of demand (demand still
// standing at the price floor).
struct PriceCurve {
    AuctionHour t;
    std::vector<double> class_volumes;
    double inelastic_demand = 0.0;
};

PriceCurve aggregate_price_curve(const OrderBook& book,
                                 const PriceClassScheme& scheme);

// Class-level clearing: sweep classes upward and return the left boundary
// of the first class whose running combined volume covers the inelastic
// demand. Zero inelastic demand clears at the price floor. Throws
// NoIntersection when the total combined volume cannot cover it.
//
// With the finest per-price scheme this reproduces clear_auction exactly
// whenever the crossing is decided on the supply side.
PriceTick clear_from_price_curve(const PriceCurve& curve,
                                 const PriceClassScheme& scheme);

struct ApproximationReport {
    double mean_abs_error = 0.0;
    double mdape = 0.0;
    std::size_t n = 0;
    std::size_t n_excluded = 0; // zero exact price, skipped by MdAPE
};

// Exact clearing vs class-level clearing over a set of books.
ApproximationReport
approximation_report(const std::vector<const OrderBook*>& books,
                     const PriceClassScheme& scheme);

} // namespace obpf
