#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace obpf {

// FNV-1a, 64 bit. Not cryptographic; used to fingerprint inputs so reruns
// can assert they saw the same data.
class Hasher {
  public:
    Hasher& add(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    Hasher& add_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            state_ ^= (v >> (8 * i)) & 0xff;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    Hasher& add_i64(std::int64_t v) {
        return add_u64(static_cast<std::uint64_t>(v));
    }

    Hasher& add_double(double v) {
        return add_u64(std::bit_cast<std::uint64_t>(v));
    }

    std::uint64_t value() const { return state_; }

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::uint64_t value);
std::uint64_t parse_hash_hex(std::string_view text);

} // namespace obpf
