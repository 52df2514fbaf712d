#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "newsent/calendar.hpp"

namespace newsent {

/// Gap-free monthly observations: values[j] belongs to start + j months.
struct MonthlySeries {
    Month start{};
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] bool empty() const { return values.empty(); }
    [[nodiscard]] Month month_at(std::size_t j) const { return add_months(start, static_cast<int>(j)); }
    /// Last covered month; only meaningful when non-empty.
    [[nodiscard]] Month last_month() const { return month_at(values.size() - 1); }
};

/// Several named series on one month axis.
struct MultiSeries {
    Month start{};
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // rows = months, cols = names

    [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] MonthlySeries column(std::size_t j) const;
};

/// Restricts every series to the months they all cover. Throws DomainError when the
/// overlap is empty.
std::vector<MonthlySeries> align_common(const std::vector<MonthlySeries>& series);

MultiSeries combine(const std::vector<MonthlySeries>& aligned, std::vector<std::string> names);

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);
double parse_number(std::string_view text);

/// "month,value" with month as YYYY-MM. The reader requires consecutive months.
void write_series_csv(const MonthlySeries& series, const std::filesystem::path& path);
void write_series_csv(const MonthlySeries& series, std::ostream& out);
MonthlySeries read_series_csv(const std::filesystem::path& path);
MonthlySeries read_series_csv(std::istream& in, std::string_view source);

/// "month,<name1>,<name2>,..."
void write_multi_csv(const MultiSeries& data, const std::filesystem::path& path);
MultiSeries read_multi_csv(const std::filesystem::path& path);

}  // namespace newsent
