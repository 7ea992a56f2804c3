#include "obpf/clearing.hpp"

#include <algorithm>

namespace obpf {

ClearingResult clear_auction(const StepCurve& supply,
                             const StepCurve& demand) {
    if (supply.points.empty() && demand.points.empty())
        throw EmptyMarket("no volume on either side of the book");

    // excess(p) = S(p) - D(p) is non-decreasing in p, so the lowest grid
    // price with non-negative excess can be found by bisection on ticks.
    const auto excess = [&](int tenths) {
        const PriceTick p = PriceTick::from_tenths(tenths);
        return supply.value_at(p) - demand.value_at(p);
    };

    if (excess(PriceTick::max_tenths) < 0.0)
        throw NoIntersection("supply never covers demand on the price grid");

    int lo = PriceTick::min_tenths;
    int hi = PriceTick::max_tenths;
    if (excess(lo) >= 0.0) {
        hi = lo;
    } else {
        // invariant: excess(lo) < 0 <= excess(hi)
        while (hi - lo > 1) {
            const int mid = lo + (hi - lo) / 2;
            if (excess(mid) >= 0.0)
                hi = mid;
            else
                lo = mid;
        }
    }

    const PriceTick price = PriceTick::from_tenths(hi);
    const double volume =
        std::min(supply.value_at(price), demand.value_at(price));
    return {price, volume};
}

} // namespace obpf
