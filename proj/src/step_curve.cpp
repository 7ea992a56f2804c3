#include "obpf/step_curve.hpp"

#include <algorithm>

namespace obpf {

double StepCurve::value_at(PriceTick p) const {
    if (kind == Side::supply) {
        // last point with price <= p
        auto it = std::upper_bound(
            points.begin(), points.end(), p,
            [](PriceTick lhs, const Point& rhs) { return lhs < rhs.price; });
        if (it == points.begin())
            return 0.0;
        return std::prev(it)->cumulative;
    }
    // first point with price >= p
    auto it = std::lower_bound(
        points.begin(), points.end(), p,
        [](const Point& lhs, PriceTick rhs) { return lhs.price < rhs; });
    if (it == points.end())
        return 0.0;
    return it->cumulative;
}

double StepCurve::total() const {
    return kind == Side::supply ? value_at(PriceTick::max())
                                : value_at(PriceTick::min());
}

StepCurve build_supply_curve(const OrderBook& book) {
    StepCurve curve;
    curve.kind = Side::supply;
    curve.points.reserve(book.supply().size());
    double cum = 0.0;
    for (const auto& [price, volume] : book.supply()) {
        cum += volume;
        curve.points.push_back({price, cum});
    }
    return curve;
}

StepCurve build_demand_curve(const OrderBook& book) {
    StepCurve curve;
    curve.kind = Side::demand;
    curve.points.reserve(book.demand().size());
    double cum = 0.0;
    const auto& bids = book.demand();
    for (auto it = bids.rbegin(); it != bids.rend(); ++it) {
        cum += it->second;
        curve.points.push_back({it->first, cum});
    }
    std::reverse(curve.points.begin(), curve.points.end());
    return curve;
}

} // namespace obpf
