#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cdalab {

std::vector<std::string_view> split_fields(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Strict integer / floating parses of a whole field. Throw std::invalid_argument.
std::int64_t parse_int(std::string_view s);
double parse_double(std::string_view s);
bool parse_bool(std::string_view s);

/// Shortest representation that round-trips; locale independent.
std::string format_double(double v);

}  // namespace cdalab
