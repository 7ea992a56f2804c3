#include "obpf/prices.hpp"

#include <charconv>
#include <cmath>

namespace obpf {

PriceTick PriceTick::from_tenths(int tenths) {
    if (tenths < min_tenths || tenths > max_tenths)
        throw OffGridPrice("price " + std::to_string(tenths / 10.0) +
                           " outside [-500.0, 3000.0]");
    return PriceTick(tenths);
}

PriceTick PriceTick::from_eur(double eur) {
    const double scaled = eur * 10.0;
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-6)
        throw OffGridPrice("price " + std::to_string(eur) +
                           " is not a multiple of 0.1");
    return from_tenths(static_cast<int>(rounded));
}

PriceTick PriceTick::parse(std::string_view text, bool strict) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw MalformedRow("bad price field '" + std::string(text) + "'");
    const double scaled = value * 10.0;
    const double rounded = std::round(scaled);
    if (strict && std::abs(scaled - rounded) > 1e-6)
        throw OffGridPrice("price '" + std::string(text) +
                           "' is not on the 0.1 EUR/MWh grid");
    return from_tenths(static_cast<int>(rounded));
}

std::string PriceTick::str() const {
    const int a = tenths_ < 0 ? -tenths_ : tenths_;
    std::string out = tenths_ < 0 ? "-" : "";
    out += std::to_string(a / 10);
    out += '.';
    out += static_cast<char>('0' + a % 10);
    return out;
}

} // namespace obpf
