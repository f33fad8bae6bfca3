#pragma once

#include <string>
#include <vector>

namespace weakh::util {

/// Shortest decimal text that parses back to exactly `x` (at most 17
/// significant digits). Non-finite values print as nan / inf / -inf.
std::string format_double(double x);

/// One CSV row, comma separated, no trailing newline. Fields containing a
/// comma, quote or newline are quoted.
std::string csv_row(const std::vector<std::string>& fields);
std::string csv_row(const std::vector<double>& values);

/// FNV-1a 64-bit digest of a byte string.
unsigned long long fnv1a64(const std::string& bytes);

/// Sixteen lowercase hex digits.
std::string hex64(unsigned long long x);

}  // namespace weakh::util
