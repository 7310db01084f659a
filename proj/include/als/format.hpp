#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace als {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a whole field; throws InvalidInput on trailing garbage.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Splits one CSV line on commas. Fields never contain quotes or commas in
/// the files this project writes.
std::vector<std::string_view> split_csv(std::string_view line);

}  // namespace als
