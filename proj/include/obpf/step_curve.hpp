#pragma once

#include <vector>

#include "obpf/order_book.hpp"
#include "obpf/prices.hpp"

namespace obpf {

// Cumulative sell or buy curve over the price grid, stored sparsely: one
// point per price that carries volume, with the running cumulative total.
//
// Supply curves accumulate upward in price (non-decreasing in price),
// demand curves accumulate downward (non-increasing in price). Points are
// in ascending price order for both kinds.
struct StepCurve {
    struct Point {
        PriceTick price;
        double cumulative = 0.0;
    };

    Side kind = Side::supply;
    std::vector<Point> points;

    // Curve value at an arbitrary grid price.
    // Supply: volume offered at prices <= p. Demand: demanded at prices >= p.
    double value_at(PriceTick p) const;

    // Total curve volume: supply at the price cap, demand at the floor.
    double total() const;
};

StepCurve build_supply_curve(const OrderBook& book);
StepCurve build_demand_curve(const OrderBook& book);

} // namespace obpf
