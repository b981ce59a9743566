#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "shufreg/errors.hpp"

namespace shufreg::csv {

// Dialect: comma separator, mandatory header row, '.' decimal point, UTF-8,
// no quoting. Trailing '\r' is tolerated on input.

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const std::string& path) const {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) return c;
        }
        throw CsvError(path + ": no column named '" + name + "'");
    }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ": cannot open for reading");
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw CsvError(path + ": empty file, header required");
    table.header = split_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_line(line);
        if (fields.size() != table.header.size()) {
            throw CsvError(path + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(table.header.size()) + " fields, got " +
                           std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    return table;
}

/// Shortest representation that round-trips a binary64 exactly.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return buf;
}

inline double parse_double(const std::string& field, const std::string& path,
                           std::size_t row, std::size_t col) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw CsvError(path + ": row " + std::to_string(row) + ", column " +
                       std::to_string(col) + ": not a number: '" + field + "'");
    }
    return v;
}

inline void write_line(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << fields[i];
    }
    out << '\n';
}

inline void write_file(const std::string& path,
                       const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError(path + ": cannot open for writing");
    write_line(out, header);
    for (const auto& row : rows) write_line(out, row);
    if (!out) throw CsvError(path + ": write failed");
}

}  // namespace shufreg::csv
