#pragma once

#include <string>
#include <string_view>

namespace behavcal {

// Shortest decimal that parses back to exactly `x` (std::to_chars).
// Non-finite values render as "nan", "inf", "-inf".
std::string format_double(double x);

// Fixed-point rendering with `decimals` digits.
std::string format_fixed(double x, int decimals);

// Round half away from zero to `decimals` places.
double round_to(double x, int decimals);

// Strict parse of a full token; throws InvalidArgument on trailing garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

}  // namespace behavcal
