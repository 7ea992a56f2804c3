#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "obpf/errors.hpp"

namespace obpf {

std::string read_file(const std::filesystem::path& path);

// Write via a sibling temp file and rename, so readers never observe a
// partially written file and reruns replace outputs atomically.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

// Lines without their trailing '\n'; a trailing final newline adds no line.
std::vector<std::string_view> split_lines(std::string_view text);

// Plain comma split, no quoting; fields are trimmed of surrounding spaces.
std::vector<std::string_view> split_csv(std::string_view line);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);

double parse_double(std::string_view text);
long parse_long(std::string_view text);

} // namespace obpf
