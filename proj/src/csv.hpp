#pragma once

// Minimal CSV helpers shared by the surface, wind and trajectory readers.
// Fields are comma separated, no quoting.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "windlq/errors.hpp"

namespace windlq::csv {

using Row = std::vector<std::string>;

inline Row split(std::string_view line) {
    Row out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Reads all non-empty lines.
inline std::vector<Row> read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("io", "cannot open " + path.string());
    }
    std::vector<Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split(line));
    }
    return rows;
}

inline double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line,
                           std::size_t column) {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty()) {
        throw ValidationError("io", path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                                        ": not a number: '" + field + "'");
    }
    return value;
}

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace windlq::csv
