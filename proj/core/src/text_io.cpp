#include "dcs/text_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace dcs::text {

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cells;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(std::string_view name) const noexcept {
    return std::find(header.begin(), header.end(), name) != header.end();
}

double Table::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows.at(row).at(col);
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("row " + std::to_string(row + 2) + ": '" + cell + "' is not a number");
    }
}

long Table::integer(std::size_t row, std::size_t col) const {
    const std::string& cell = rows.at(row).at(col);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw std::runtime_error("row " + std::to_string(row + 2) + ": '" + cell + "' is not an integer");
    }
    return v;
}

Table read_table(std::istream& is) {
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        const std::string s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        auto cells = split_line(s);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw std::runtime_error("row with " + std::to_string(cells.size()) + " cells under a header of " +
                                     std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) throw std::runtime_error("table has no header");
    return t;
}

Table read_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_table(in);
}

void write_row(std::ostream& os, std::span<const std::string> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) os << ',';
        os << cells[i];
    }
    os << '\n';
}

void write_row(std::ostream& os, std::initializer_list<std::string> cells) {
    write_row(os, std::span<const std::string>(cells.begin(), cells.size()));
}

}  // namespace dcs::text
