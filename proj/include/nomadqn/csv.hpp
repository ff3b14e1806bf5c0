#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomadqn::csv {

// Fixed-precision decimal rendering keeps rerun output byte-identical.
inline std::string fixed(double v, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }

    // Raises with the column name when it is absent.
    int require_column(const std::string& name) const {
        const int idx = column_index(name);
        if (idx < 0)
            throw std::runtime_error("csv: missing required column '" + name + "'");
        return idx;
    }

    std::vector<double> numeric_column(const std::string& name) const {
        const int idx = require_column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) {
            try {
                out.push_back(std::stod(row.at(idx)));
            } catch (const std::exception&) {
                throw std::runtime_error("csv: non-numeric value in column '" + name + "'");
            }
        }
        return out;
    }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline Table read(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("csv: cannot open " + path);
    Table t;
    std::string line;
    if (!std::getline(is, line) || line.empty())
        throw std::runtime_error("csv: empty file " + path);
    t.columns = split_line(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != t.columns.size())
            throw std::runtime_error("csv: ragged row in " + path);
        t.rows.push_back(std::move(fields));
    }
    return t;
}

}  // namespace nomadqn::csv
