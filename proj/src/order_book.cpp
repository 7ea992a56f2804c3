#include "obpf/order_book.hpp"

namespace obpf {

void OrderBook::add(Side side, PriceTick price, double volume_mwh) {
    if (volume_mwh < 0.0)
        throw Error("negative volume " + std::to_string(volume_mwh) + " at " +
                    price.str());
    if (volume_mwh == 0.0)
        return;
    auto& book = side == Side::supply ? supply_ : demand_;
    book[price] += volume_mwh;
}

double OrderBook::total_supply() const {
    double sum = 0.0;
    for (const auto& [p, v] : supply_)
        sum += v;
    return sum;
}

double OrderBook::total_demand() const {
    double sum = 0.0;
    for (const auto& [p, v] : demand_)
        sum += v;
    return sum;
}

} // namespace obpf
