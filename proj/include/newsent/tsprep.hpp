#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "newsent/series.hpp"

namespace newsent {

inline constexpr double kMonthlyHpLambda = 14400.0;

struct HpResult {
    MonthlySeries trend;
    MonthlySeries cycle;
    double lambda = kMonthlyHpLambda;
};

/// Hodrick-Prescott trend: minimises sum (y - t)^2 + lambda * sum (second difference of t)^2,
/// solved exactly with a banded LDL' factorisation of I + lambda K'K.
/// Throws DomainError for fewer than 4 points or a negative lambda.
HpResult hp_filter(const MonthlySeries& series, double lambda = kMonthlyHpLambda);
std::vector<double> hp_trend(std::span<const double> y, double lambda);

/// (x - min) / (max - min). Throws DomainError for a constant series.
MonthlySeries minmax_normalize(const MonthlySeries& series);

struct MovingAverage {
    MonthlySeries series;
    int period = 1;
    std::size_t trimmed_each_side = 0;
};

/// Centred moving average. Odd periods average p points; even periods use p + 1 points
/// with half weight at both ends, divided by p. Only positions with a full window are
/// kept, so the result starts `trimmed_each_side` months later than the input.
MovingAverage centered_ma(const MonthlySeries& series, int period);

struct AdfResult {
    double statistic = 0.0;
    int lags_used = 0;
    double approx_p = 1.0;
    bool reject_unit_root_at_5pct = false;
    double critical_value_5pct = 0.0;
    std::size_t nobs = 0;
};

/// Augmented Dickey-Fuller test with a constant, lag order picked by AIC over
/// 0..max_lags on a common sample. Throws DomainError when the series is shorter
/// than max_lags + 10.
AdfResult adf_test(std::span<const double> series, int max_lags);
inline AdfResult adf_test(const MonthlySeries& series, int max_lags) { return adf_test(series.values, max_lags); }

/// 5% critical value of the constant-only ADF statistic, linearly interpolated in sample size.
double adf_critical_value_5pct(std::size_t nobs);

/// Approximate p-value of a constant-only ADF statistic from MacKinnon's response surface.
double adf_approx_p(double statistic);

struct SeriesStats {
    double mean = 0.0;
    double median = 0.0;
    double maximum = 0.0;
    double minimum = 0.0;
    double std_dev = 0.0;   // population
    double skewness = 0.0;  // m3 / m2^1.5
    double kurtosis = 0.0;  // m4 / m2^2, not excess
    std::size_t n = 0;
    bool degenerate = false;  // zero variance; skewness and kurtosis reported as 0
};

SeriesStats describe(std::span<const double> values);
inline SeriesStats describe(const MonthlySeries& series) { return describe(series.values); }

enum class PrepStep { Hp, Minmax, MovingAverage };

std::string_view to_string(PrepStep step);
/// "hp", "minmax" or "ma"; throws ConfigError otherwise.
PrepStep parse_prep_step(std::string_view name);

struct PrepChain {
    std::vector<PrepStep> steps{PrepStep::Hp, PrepStep::Minmax, PrepStep::MovingAverage};
    double lambda = kMonthlyHpLambda;
    int period = 12;
};

struct PreparedSeries {
    MonthlySeries series;
    std::size_t trimmed_each_side = 0;
    nlohmann::ordered_json chain;  // steps with their parameters, in order
};

/// Applies the chain in order; the HP step keeps the cyclical component.
PreparedSeries prepare_series(const MonthlySeries& raw, const PrepChain& chain);

}  // namespace newsent
