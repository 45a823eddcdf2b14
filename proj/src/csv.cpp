#include "oscfit/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>

#include "oscfit/errors.hpp"

namespace oscfit::csv {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string join_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += fields[i];
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

[[noreturn]] void bad_field(std::string_view field, std::string_view column, std::size_t line_no,
                            const char* what) {
    throw DataError("line " + std::to_string(line_no) + ": " + what + " value '" +
                    std::string(field) + "' in column '" + std::string(column) + "'");
}

}  // namespace

double parse_double(std::string_view field, std::string_view column, std::size_t line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) bad_field(field, column, line_no, "unparseable numeric");
    if (!std::isfinite(v)) bad_field(field, column, line_no, "non-finite");
    return v;
}

long parse_long(std::string_view field, std::string_view column, std::size_t line_no) {
    long v = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) bad_field(field, column, line_no, "unparseable integer");
    return v;
}

bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || is_comment(line)) continue;
        return true;
    }
    return false;
}

}  // namespace oscfit::csv
