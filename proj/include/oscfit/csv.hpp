#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace oscfit::csv {

// Splits one CSV line on commas. No quoting support: field values must not
// contain commas (labels in this toolkit never do).
std::vector<std::string> split_line(std::string_view line);

std::string join_line(const std::vector<std::string>& fields);

// Shortest-exact double formatting (17 significant digits round-trips).
std::string format_double(double v);

// Strict numeric parsing with a line number for error messages.
double parse_double(std::string_view field, std::string_view column, std::size_t line_no);
long parse_long(std::string_view field, std::string_view column, std::size_t line_no);

inline bool is_comment(std::string_view line) {
    return !line.empty() && line.front() == '#';
}

// Reads the next non-comment line; returns false at EOF. Increments line_no
// for every physical line consumed. Strips a trailing '\r'.
bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no);

}  // namespace oscfit::csv
