#pragma once

#include <compare>
#include <string>
#include <string_view>

#include "obpf/errors.hpp"

namespace obpf {

// A price on the fixed day-ahead grid [-500.0, 3000.0] EUR/MWh with 0.1 tick
// size. Stored as integer tenths so grid walks and comparisons are exact.
class PriceTick {
  public:
    static constexpr int min_tenths = -5000;
    static constexpr int max_tenths = 30000;
    static constexpr int grid_size = max_tenths - min_tenths + 1; // 35001

    constexpr PriceTick() = default;

    static PriceTick from_tenths(int tenths);
    // exact multiple of 0.1 required
    static PriceTick from_eur(double eur);
    // strict: reject prices off the 0.1 grid; otherwise snap to nearest tick
    static PriceTick parse(std::string_view text, bool strict = true);

    static constexpr PriceTick min() { return PriceTick(min_tenths); }
    static constexpr PriceTick max() { return PriceTick(max_tenths); }

    constexpr int tenths() const { return tenths_; }
    constexpr double eur() const { return tenths_ / 10.0; }
    constexpr int grid_index() const { return tenths_ - min_tenths; }

    // canonical text form, e.g. "-500.0", "0.0", "35.4"
    std::string str() const;

    auto operator<=>(const PriceTick&) const = default;

  private:
    constexpr explicit PriceTick(int tenths) : tenths_(tenths) {}
    int tenths_ = min_tenths;
};

} // namespace obpf
