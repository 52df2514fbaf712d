#include "newsent/series.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "newsent/errors.hpp"

namespace newsent {
namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

MonthlySeries MultiSeries::column(std::size_t j) const {
    MonthlySeries s{start, {}};
    s.values.resize(rows());
    for (std::size_t t = 0; t < rows(); ++t) s.values[t] = values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
    return s;
}

std::vector<MonthlySeries> align_common(const std::vector<MonthlySeries>& series) {
    if (series.empty()) return {};
    Month first = series.front().start;
    Month last = series.front().empty() ? first : series.front().last_month();
    for (const auto& s : series) {
        if (s.empty()) throw DomainError("cannot align an empty series");
        first = std::max(first, s.start);
        last = std::min(last, s.last_month());
    }
    if (months_between(first, last) < 0) throw DomainError("series share no common months");
    const auto n = static_cast<std::size_t>(months_between(first, last) + 1);
    std::vector<MonthlySeries> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        const auto offset = static_cast<std::size_t>(months_between(s.start, first));
        out.push_back({first, std::vector<double>(s.values.begin() + static_cast<std::ptrdiff_t>(offset),
                                                  s.values.begin() + static_cast<std::ptrdiff_t>(offset + n))});
    }
    return out;
}

MultiSeries combine(const std::vector<MonthlySeries>& aligned, std::vector<std::string> names) {
    if (aligned.size() != names.size()) throw DomainError("one name per series required");
    MultiSeries m;
    m.names = std::move(names);
    if (aligned.empty()) return m;
    m.start = aligned.front().start;
    const auto n = aligned.front().size();
    m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(aligned.size()));
    for (std::size_t j = 0; j < aligned.size(); ++j) {
        if (aligned[j].start != m.start || aligned[j].size() != n) {
            throw DomainError("series are not aligned");
        }
        for (std::size_t t = 0; t < n; ++t) {
            m.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = aligned[j].values[t];
        }
    }
    return m;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

double parse_number(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError(fmt::format("not a number: '{}'", text));
    }
    return v;
}

void write_series_csv(const MonthlySeries& series, std::ostream& out) {
    out << "month,value\n";
    for (std::size_t j = 0; j < series.size(); ++j) {
        out << format_month(series.month_at(j)) << ',' << format_number(series.values[j]) << '\n';
    }
}

void write_series_csv(const MonthlySeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    write_series_csv(series, out);
}

MonthlySeries read_series_csv(std::istream& in, std::string_view source) {
    MonthlySeries s;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (view.empty()) continue;
        auto fields = split_csv_line(view);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() == 2 && trim(fields[0]) == "month") continue;
            throw ConfigError(fmt::format("{}: expected header 'month,value'", source));
        }
        if (fields.size() != 2) {
            throw ConfigError(fmt::format("{}:{}: expected 2 fields", source, line_no));
        }
        auto month = parse_month(trim(fields[0]));
        if (!month) throw ConfigError(fmt::format("{}:{}: bad month '{}'", source, line_no, fields[0]));
        double value = 0.0;
        try {
            value = parse_number(fields[1]);
        } catch (const ConfigError&) {
            throw ConfigError(fmt::format("{}:{}: bad value '{}'", source, line_no, fields[1]));
        }
        if (s.values.empty()) {
            s.start = *month;
        } else if (*month != s.month_at(s.values.size())) {
            throw ConfigError(fmt::format("{}:{}: month {} breaks the consecutive sequence", source,
                                          line_no, format_month(*month)));
        }
        s.values.push_back(value);
    }
    return s;
}

MonthlySeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
    return read_series_csv(in, path.string());
}

void write_multi_csv(const MultiSeries& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << "month";
    for (const auto& n : data.names) out << ',' << n;
    out << '\n';
    for (Eigen::Index t = 0; t < data.values.rows(); ++t) {
        out << format_month(add_months(data.start, static_cast<int>(t)));
        for (Eigen::Index j = 0; j < data.values.cols(); ++j) out << ',' << format_number(data.values(t, j));
        out << '\n';
    }
}

MultiSeries read_multi_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
    const auto source = path.string();
    MultiSeries m;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (view.empty()) continue;
        auto fields = split_csv_line(view);
        if (m.names.empty()) {
            if (fields.size() < 2 || trim(fields[0]) != "month") {
                throw ConfigError(fmt::format("{}: expected header 'month,<series>...'", source));
            }
            for (std::size_t j = 1; j < fields.size(); ++j) m.names.emplace_back(trim(fields[j]));
            continue;
        }
        if (fields.size() != m.names.size() + 1) {
            throw ConfigError(fmt::format("{}:{}: expected {} fields", source, line_no, m.names.size() + 1));
        }
        auto month = parse_month(trim(fields[0]));
        if (!month) throw ConfigError(fmt::format("{}:{}: bad month '{}'", source, line_no, fields[0]));
        if (rows.empty()) {
            m.start = *month;
        } else if (*month != add_months(m.start, static_cast<int>(rows.size()))) {
            throw ConfigError(fmt::format("{}:{}: months must be consecutive", source, line_no));
        }
        std::vector<double> row;
        for (std::size_t j = 1; j < fields.size(); ++j) row.push_back(parse_number(fields[j]));
        rows.push_back(std::move(row));
    }
    if (m.names.empty()) throw ConfigError(fmt::format("{}: empty file", source));
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.names.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t j = 0; j < m.names.size(); ++j) {
            m.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
        }
    }
    return m;
}

}  // namespace newsent
