#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "obpf/step_curve.hpp"

namespace obpf {

// Price classes shared by every feature vector and target. Boundaries are
// fitted once on training data and then frozen; supply and demand get their
// own boundary lists and the merged union defines the classes.
//
// Class k (0-based) covers [merged_bounds[k], merged_bounds[k+1]), except
// the last class, which also contains the upper endpoint.
struct PriceClassScheme {
    std::vector<PriceTick> supply_bounds; // ascending, endpoints included
    std::vector<PriceTick> demand_bounds;
    std::vector<PriceTick> merged_bounds;
    double target_volume = 0.0;  // 0 when not fitted by the volume walk
    std::uint64_t train_hash = 0;

    std::size_t class_count() const { return merged_bounds.size() - 1; }
    std::size_t class_of(PriceTick p) const;
};

// Pointwise mean of the per-book cumulative curves (supply, demand).
std::pair<StepCurve, StepCurve>
average_curves(const std::vector<const OrderBook*>& books);

// Walk the averaged curve in its accumulation direction (supply upward in
// price, demand downward) and emit a boundary at every price that completes
// at least `target_volume` MWh of averaged volume since the last boundary.
// Grid endpoints are always part of the result.
std::vector<PriceTick> compute_boundaries(const StepCurve& averaged,
                                          double target_volume);

// Largest single-price increment of the averaged curve; bounds how far a
// class volume can overshoot the target.
double max_tick_increment(const StepCurve& averaged);

std::vector<PriceTick> merge_boundaries(std::vector<PriceTick> a,
                                        const std::vector<PriceTick>& b);

PriceClassScheme fit_scheme(const std::vector<const OrderBook*>& train_books,
                            double target_volume);

// Finest useful scheme: one class per price that carries volume in any book.
// Aggregating with it loses nothing, which makes it the reference point for
// approximation-error studies.
PriceClassScheme per_tick_scheme(const std::vector<const OrderBook*>& books);

std::uint64_t books_hash(const std::vector<const OrderBook*>& books);

void save_scheme(const PriceClassScheme& scheme,
                 const std::filesystem::path& path);
PriceClassScheme load_scheme(const std::filesystem::path& path);

} // namespace obpf
