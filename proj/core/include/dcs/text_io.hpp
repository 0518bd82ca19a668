#pragma once

#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcs::text {

/// Shortest round-trip decimal form (%.17g).
[[nodiscard]] std::string exact(double v);

/// Comma-delimited table with a one-line header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws std::runtime_error naming the column when absent.
    [[nodiscard]] std::size_t column(std::string_view name) const;
    [[nodiscard]] bool has_column(std::string_view name) const noexcept;
    [[nodiscard]] double number(std::size_t row, std::size_t col) const;
    [[nodiscard]] long integer(std::size_t row, std::size_t col) const;
};

/// Blank lines and lines starting with '#' are skipped.
[[nodiscard]] Table read_table(std::istream& is);
[[nodiscard]] Table read_table_file(const std::string& path);

void write_row(std::ostream& os, std::span<const std::string> cells);
void write_row(std::ostream& os, std::initializer_list<std::string> cells);

}  // namespace dcs::text
