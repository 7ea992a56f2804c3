#pragma once

namespace obpf {

inline constexpr const char* version = "0.1.0";

} // namespace obpf
