#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tempo::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
/// Fixed number of significant digits (%.Ng).
std::string format_real(double v, int significant_digits);

std::vector<std::string> split_line(std::string_view line, char sep = ',');

double parse_real(std::string_view field);

}  // namespace tempo::csv
