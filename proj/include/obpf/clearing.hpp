#pragma once

#include "obpf/step_curve.hpp"

namespace obpf {

struct ClearingResult {
    PriceTick price;
    double volume = 0.0;
};

// Uniform-price auction clearing on the 0.1 grid: the market clearing price
// is the lowest grid price where cumulative supply reaches cumulative
// demand; cleared volume is min(supply, demand) there.
//
// Throws EmptyMarket when both sides carry no volume and NoIntersection
// when supply never reaches demand anywhere on the grid.
ClearingResult clear_auction(const StepCurve& supply, const StepCurve& demand);

inline ClearingResult clear_auction(const OrderBook& book) {
    return clear_auction(build_supply_curve(book), build_demand_curve(book));
}

} // namespace obpf
