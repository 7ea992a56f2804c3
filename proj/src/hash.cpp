#include "obpf/hash.hpp"

#include <charconv>

#include "obpf/errors.hpp"

namespace obpf {

std::string hash_hex(std::uint64_t value) {
    char buf[17] = {};
    for (int i = 15; i >= 0; --i) {
        buf[i] = "0123456789abcdef"[value & 0xf];
        value >>= 4;
    }
    return std::string(buf, 16);
}

std::uint64_t parse_hash_hex(std::string_view text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                     v, 16);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw MalformedRow("bad hash '" + std::string(text) + "'");
    return v;
}

} // namespace obpf
