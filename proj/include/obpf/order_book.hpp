#pragma once

#include <compare>
#include <map>
#include <string>

#include "obpf/calendar.hpp"
#include "obpf/prices.hpp"

namespace obpf {

// One delivery hour of one delivery day.
struct AuctionHour {
    Date date;
    int hour = 0; // 0..23

    auto operator<=>(const AuctionHour&) const = default;
    std::string str() const {
        return date.str() + "H" + (hour < 10 ? "0" : "") +
               std::to_string(hour);
    }
};

enum class Side { supply, demand };

// Aggregated auction bids for one hour: volume per grid price and side.
// Multiple orders at the same price accumulate.
class OrderBook {
  public:
    OrderBook() = default;
    explicit OrderBook(AuctionHour when) : t(when) {}

    void add(Side side, PriceTick price, double volume_mwh);

    const std::map<PriceTick, double>& supply() const { return supply_; }
    const std::map<PriceTick, double>& demand() const { return demand_; }

    double total_supply() const;
    double total_demand() const;
    bool empty() const { return supply_.empty() && demand_.empty(); }

    AuctionHour t;

  private:
    std::map<PriceTick, double> supply_;
    std::map<PriceTick, double> demand_;
};

} // namespace obpf
