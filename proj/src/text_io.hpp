#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sdeinfer::io {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

}  // namespace sdeinfer::io
