#pragma once

#include <string>
#include <vector>

namespace irtrank {

// Strips surrounding spaces, tabs and line breaks.
std::string trim(const std::string& s);

// RFC-4180-style split of one record; quoted fields may contain commas and "".
// Unquoted whitespace around fields is trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes a field only when it contains a comma, quote or newline.
std::string csv_field(const std::string& field);

// Shortest text that round-trips to the same double. "nan"/"inf" for non-finite values.
std::string format_double(double value);

// Fixed notation with the given number of decimals, for presentation tables.
std::string format_fixed(double value, int decimals = 3);

}  // namespace irtrank
