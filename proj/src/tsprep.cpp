#include "newsent/tsprep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "least_squares.hpp"
#include "newsent/distributions.hpp"
#include "newsent/errors.hpp"

namespace newsent {
namespace {

// Constant-only Dickey-Fuller 5% critical values by sample size.
constexpr std::array<double, 6> kAdfSizes{25, 50, 100, 250, 500, 100000};
constexpr std::array<double, 6> kAdfCv5{-3.00, -2.93, -2.89, -2.87, -2.87, -2.86};

}  // namespace

std::vector<double> hp_trend(std::span<const double> y, double lambda) {
    const std::size_t n = y.size();
    if (n < 4) throw DomainError("hp_filter: need at least 4 observations");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("hp_filter: lambda must be finite and >= 0");

    // Bands of A = I + lambda K'K: a0 main diagonal, a1 first and a2 second super-diagonal.
    std::vector<double> a0(n, 1.0), a1(n, 0.0), a2(n, 0.0);
    constexpr std::array<double, 3> stencil{1.0, -2.0, 1.0};
    for (std::size_t r = 0; r + 2 < n; ++r) {
        for (std::size_t i = 0; i < 3; ++i) {
            a0[r + i] += lambda * stencil[i] * stencil[i];
            if (i + 1 < 3) a1[r + i] += lambda * stencil[i] * stencil[i + 1];
            if (i + 2 < 3) a2[r + i] += lambda * stencil[i] * stencil[i + 2];
        }
    }

    // A = L D L' with unit lower-triangular L of bandwidth 2.
    std::vector<double> d(n), l1(n, 0.0), l2(n, 0.0);  // l1[i] = L(i, i-1), l2[i] = L(i, i-2)
    for (std::size_t i = 0; i < n; ++i) {
        double di = a0[i];
        if (i >= 1) di -= l1[i] * l1[i] * d[i - 1];
        if (i >= 2) di -= l2[i] * l2[i] * d[i - 2];
        d[i] = di;
        // Column i below the diagonal; l2[i + 1] was set while processing column i - 1.
        if (i + 2 < n) l2[i + 2] = a2[i] / di;
        if (i + 1 < n) {
            double v = a1[i];
            if (i >= 1) v -= l2[i + 1] * l1[i] * d[i - 1];
            l1[i + 1] = v / di;
        }
    }

    std::vector<double> z(y.begin(), y.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 1) z[i] -= l1[i] * z[i - 1];
        if (i >= 2) z[i] -= l2[i] * z[i - 2];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] /= d[i];
    for (std::size_t k = n; k-- > 0;) {
        if (k + 1 < n) z[k] -= l1[k + 1] * z[k + 1];
        if (k + 2 < n) z[k] -= l2[k + 2] * z[k + 2];
    }
    return z;
}

HpResult hp_filter(const MonthlySeries& series, double lambda) {
    HpResult r;
    r.lambda = lambda;
    r.trend = {series.start, hp_trend(series.values, lambda)};
    r.cycle = {series.start, std::vector<double>(series.size())};
    for (std::size_t i = 0; i < series.size(); ++i) r.cycle.values[i] = series.values[i] - r.trend.values[i];
    return r;
}

MonthlySeries minmax_normalize(const MonthlySeries& series) {
    if (series.empty()) throw DomainError("minmax_normalize: empty series");
    auto [lo, hi] = std::minmax_element(series.values.begin(), series.values.end());
    const double min = *lo, max = *hi;
    if (!(max > min)) throw DomainError("minmax_normalize: series has zero range");
    MonthlySeries out{series.start, {}};
    out.values.reserve(series.size());
    for (double x : series.values) out.values.push_back((x - min) / (max - min));
    return out;
}

MovingAverage centered_ma(const MonthlySeries& series, int period) {
    if (period < 1) throw DomainError("centered_ma: period must be >= 1");
    const auto p = static_cast<std::size_t>(period);
    if (series.size() < p + 1) {
        throw DomainError(fmt::format("centered_ma: {} points is too short for period {}", series.size(), period));
    }
    const std::size_t reach = p / 2;  // odd: (p-1)/2, even: p/2
    const bool even = p % 2 == 0;
    MovingAverage out;
    out.period = period;
    out.trimmed_each_side = reach;
    out.series.start = add_months(series.start, static_cast<int>(reach));
    const auto& x = series.values;
    for (std::size_t t = reach; t + reach < x.size(); ++t) {
        double sum = 0.0;
        for (std::size_t j = t - reach; j <= t + reach; ++j) {
            const bool end = even && (j == t - reach || j == t + reach);
            sum += end ? 0.5 * x[j] : x[j];
        }
        out.series.values.push_back(sum / static_cast<double>(p));
    }
    return out;
}

double adf_critical_value_5pct(std::size_t nobs) {
    const double n = static_cast<double>(nobs);
    if (n <= kAdfSizes.front()) return kAdfCv5.front();
    if (n >= kAdfSizes.back()) return kAdfCv5.back();
    for (std::size_t i = 0; i + 1 < kAdfSizes.size(); ++i) {
        if (n <= kAdfSizes[i + 1]) {
            const double w = (n - kAdfSizes[i]) / (kAdfSizes[i + 1] - kAdfSizes[i]);
            return kAdfCv5[i] * (1.0 - w) + kAdfCv5[i + 1] * w;
        }
    }
    return kAdfCv5.back();
}

double adf_approx_p(double statistic) {
    // MacKinnon (1994) constant case, one variable.
    constexpr double tau_max = 2.74, tau_min = -18.83, tau_star = -1.61;
    constexpr std::array<double, 3> small{2.1659, 1.4412, 0.038269};
    constexpr std::array<double, 4> large{1.7339, 0.93202, -0.12745, -0.010368};
    if (statistic > tau_max) return 1.0;
    if (statistic < tau_min) return 0.0;
    double poly = 0.0, pow = 1.0;
    if (statistic <= tau_star) {
        for (double c : small) { poly += c * pow; pow *= statistic; }
    } else {
        for (double c : large) { poly += c * pow; pow *= statistic; }
    }
    return std::clamp(dist::normal_cdf(poly), 0.0, 1.0);
}

AdfResult adf_test(std::span<const double> y, int max_lags) {
    if (max_lags < 0) throw DomainError("adf_test: max_lags must be >= 0");
    const auto n = y.size();
    if (n < static_cast<std::size_t>(max_lags) + 10) {
        throw DomainError(fmt::format("adf_test: {} points is too short for max_lags {}", n, max_lags));
    }
    std::vector<double> dy(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) dy[t] = y[t] - y[t - 1];

    // Regression of dy[t] on [1, y[t-1], dy[t-1..t-lags]] for t in [start, n).
    auto design = [&](int lags, std::size_t start, Eigen::MatrixXd& X, Eigen::VectorXd& Y) {
        const auto rows = static_cast<Eigen::Index>(n - start);
        X.resize(rows, 2 + lags);
        Y.resize(rows);
        for (std::size_t t = start; t < n; ++t) {
            const auto r = static_cast<Eigen::Index>(t - start);
            Y(r) = dy[t];
            X(r, 0) = 1.0;
            X(r, 1) = y[t - 1];
            for (int j = 1; j <= lags; ++j) X(r, 1 + j) = dy[t - static_cast<std::size_t>(j)];
        }
    };

    const auto common_start = static_cast<std::size_t>(max_lags) + 1;
    int best_lag = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int lags = 0; lags <= max_lags; ++lags) {
        Eigen::MatrixXd X;
        Eigen::VectorXd Y;
        design(lags, common_start, X, Y);
        const auto fit = detail::least_squares(X, Y);
        const double nobs = static_cast<double>(X.rows());
        const double rss = fit.residuals.squaredNorm();
        const double aic = nobs * std::log(rss / nobs) + 2.0 * static_cast<double>(X.cols());
        if (aic < best_aic) {
            best_aic = aic;
            best_lag = lags;
        }
    }

    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    design(best_lag, static_cast<std::size_t>(best_lag) + 1, X, Y);
    const auto fit = detail::least_squares(X, Y);
    const double dof = static_cast<double>(X.rows() - X.cols());
    const double s2 = fit.residuals.squaredNorm() / dof;
    const double se = std::sqrt(s2 * fit.xtx_inv(1, 1));

    AdfResult r;
    r.statistic = fit.coef(1, 0) / se;
    r.lags_used = best_lag;
    r.nobs = static_cast<std::size_t>(X.rows());
    r.approx_p = adf_approx_p(r.statistic);
    r.critical_value_5pct = adf_critical_value_5pct(r.nobs);
    r.reject_unit_root_at_5pct = r.statistic < r.critical_value_5pct;
    return r;
}

SeriesStats describe(std::span<const double> values) {
    if (values.empty()) throw DomainError("describe: empty series");
    SeriesStats s;
    s.n = values.size();
    const double n = static_cast<double>(s.n);
    double sum = 0.0;
    for (double x : values) sum += x;
    s.mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : values) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.minimum = sorted.front();
    s.maximum = sorted.back();
    s.median = s.n % 2 ? sorted[s.n / 2] : 0.5 * (sorted[s.n / 2 - 1] + sorted[s.n / 2]);
    s.std_dev = std::sqrt(m2);
    if (m2 == 0.0) {
        s.degenerate = true;
    } else {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
    }
    return s;
}

std::string_view to_string(PrepStep step) {
    switch (step) {
        case PrepStep::Hp: return "hp";
        case PrepStep::Minmax: return "minmax";
        case PrepStep::MovingAverage: return "ma";
    }
    return "?";
}

PrepStep parse_prep_step(std::string_view name) {
    if (name == "hp") return PrepStep::Hp;
    if (name == "minmax") return PrepStep::Minmax;
    if (name == "ma") return PrepStep::MovingAverage;
    throw ConfigError(fmt::format("unknown preparation step '{}' (expected hp, minmax or ma)", name));
}

PreparedSeries prepare_series(const MonthlySeries& raw, const PrepChain& chain) {
    PreparedSeries out{raw, 0, nlohmann::ordered_json::array()};
    for (auto step : chain.steps) {
        nlohmann::ordered_json entry;
        entry["step"] = std::string(to_string(step));
        switch (step) {
            case PrepStep::Hp:
                out.series = hp_filter(out.series, chain.lambda).cycle;
                entry["lambda"] = chain.lambda;
                entry["component"] = "cycle";
                break;
            case PrepStep::Minmax:
                out.series = minmax_normalize(out.series);
                break;
            case PrepStep::MovingAverage: {
                auto ma = centered_ma(out.series, chain.period);
                out.series = std::move(ma.series);
                out.trimmed_each_side += ma.trimmed_each_side;
                entry["period"] = chain.period;
                entry["trimmed_each_side"] = ma.trimmed_each_side;
                break;
            }
        }
        out.chain.push_back(std::move(entry));
    }
    return out;
}

}  // namespace newsent
