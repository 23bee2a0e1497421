#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mindiff {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
/// "NA" for an empty optional.
std::string format_optional(const std::optional<double>& value);

double parse_double(std::string_view text);
std::optional<double> parse_optional(std::string_view text);

/// Splits one CSV line on commas. Fields never contain commas or quotes here.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace mindiff
