#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsent/series.hpp"

namespace newsent {

/// Y_t = alpha + beta Y_{t-1} + gamma X_{t-lag} + e_t.
struct OlsResult {
    int lag = 0;
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
    double se_alpha = 0.0, se_beta = 0.0, se_gamma = 0.0;
    double p_alpha = 1.0, p_beta = 1.0, p_gamma = 1.0;
    double r_squared = 0.0;
    std::size_t n_used = 0;  // T - max(1, lag)
    Month first_month{};     // month of the first Y_t used
    Eigen::VectorXd residuals;
};

/// Throws DomainError when y and x cover different months or fewer than 10 rows remain,
/// EstimationError when the regressors are collinear.
OlsResult fit_ols_ar1x(const MonthlySeries& y, const MonthlySeries& x, int lag);

struct PathCell {
    int lag = 0;
    std::optional<OlsResult> result;
    std::string error;  // set when result is empty
};

/// fit_ols_ar1x for lag = 0..max_lag; failures are recorded per cell.
std::vector<PathCell> coefficient_path(const MonthlySeries& y, const MonthlySeries& x, int max_lag);

/// Reduced-form VAR(p) with intercept, estimated equation by equation.
/// Regressor rows of `coef` are ordered [const, M_{t-1}, ..., M_{t-p}], each lag block
/// following `names`.
struct VarModel {
    int p = 0;
    std::vector<std::string> names;
    Eigen::VectorXd intercept;
    std::vector<Eigen::MatrixXd> lags;  // B_1..B_p, B_j(i, k) = effect of variable k at lag j on i
    Eigen::MatrixXd residual_cov;       // E'E / (T_eff - m p - 1)
    Eigen::MatrixXd residual_cov_ml;    // E'E / T_eff
    std::size_t t_effective = 0;
    Month sample_start{};

    Eigen::MatrixXd coef;        // k x m
    Eigen::MatrixXd std_errors;  // k x m
    Eigen::MatrixXd t_stats;     // k x m
    Eigen::VectorXd r_squared;
    Eigen::VectorXd adj_r_squared;
    Eigen::MatrixXd xtx_inv;    // k x k
    Eigen::MatrixXd residuals;  // T_eff x m

    [[nodiscard]] std::size_t m() const { return names.size(); }
    [[nodiscard]] std::size_t regressors() const { return 1 + m() * static_cast<std::size_t>(p); }
    /// "C" for the intercept, otherwise "NAME(-lag)".
    [[nodiscard]] std::string regressor_name(std::size_t row) const;
    /// Row of coefficient for variable `var` at lag `lag` (1-based).
    [[nodiscard]] std::size_t regressor_row(std::size_t var, int lag) const {
        return 1 + static_cast<std::size_t>(lag - 1) * m() + var;
    }
};

/// Throws DomainError when T - p does not exceed m p + 1, EstimationError when the
/// regressor cross-product is singular.
VarModel fit_var(const Eigen::MatrixXd& data, int p, std::vector<std::string> names = {});
VarModel fit_var(const MultiSeries& data, int p);

/// Same model with variables listed in `order` (a permutation of model.names).
VarModel reorder(const VarModel& model, const std::vector<std::string>& order);

struct LagCriteria {
    int lag = 0;
    double log_det = 0.0;
    std::size_t params = 0;  // m (1 + m lag)
    double aic = 0.0, bic = 0.0, hq = 0.0;
};

struct LagSelection {
    std::vector<LagCriteria> rows;  // lag 0..max_lag
    std::size_t t_effective = 0;    // common sample, T - max_lag
    int aic_lag = 0, bic_lag = 0, hq_lag = 0;
};

/// Information criteria on the common sample t = max_lag..T-1 using the ML residual covariance.
LagSelection select_lag(const Eigen::MatrixXd& data, int max_lag);
inline LagSelection select_lag(const MultiSeries& data, int max_lag) { return select_lag(data.values, max_lag); }

double spectral_radius(const VarModel& model);

/// Psi_0 = I, Psi_h = sum_{j=1..min(h,p)} B_j Psi_{h-j}.
std::vector<Eigen::MatrixXd> ma_coefficients(const VarModel& model, int horizons);

struct IrfResult {
    int horizons = 0;
    std::vector<std::string> ordering;
    std::vector<Eigen::MatrixXd> responses;  // [h](response, shock), h = 0..horizons
    bool stable = true;
    double spectral_radius = 0.0;
    std::vector<std::string> warnings;
};

/// Orthogonalised responses Psi_h L with L the lower Cholesky factor of residual_cov.
/// An unstable model is reported through `warnings`. Throws EstimationError when
/// residual_cov is not positive definite.
IrfResult irf_cholesky(const VarModel& model, int horizons);

struct IrfBands {
    int draws = 0;  // successful bootstrap replications
    double level = 0.95;
    std::vector<Eigen::MatrixXd> lower;
    std::vector<Eigen::MatrixXd> upper;
};

/// Residual-bootstrap percentile bands around irf_cholesky. `data` is the sample the
/// model was fitted on, in the model's variable order.
IrfBands irf_bootstrap_bands(const Eigen::MatrixXd& data, const VarModel& model, int horizons, int draws,
                             std::uint64_t seed, double level = 0.95);

struct GrangerTest {
    std::string excluded;  // "All" for the joint row
    double chi_sq = 0.0;
    int df = 0;
    double p_value = 1.0;
    bool ok = true;
    std::string error;
};

struct GrangerEquation {
    std::string dependent;
    std::vector<GrangerTest> tests;  // one per other variable, then "All"
};

struct GrangerResult {
    std::vector<GrangerEquation> equations;
};

/// (Rb)'(R V R')^{-1}(Rb) for coefficient vector b with covariance V, R selecting `rows`.
/// Throws EstimationError when R V R' is singular.
double wald_statistic(const Eigen::VectorXd& b, const Eigen::MatrixXd& cov, const std::vector<std::size_t>& rows);

GrangerResult granger_wald(const VarModel& model);

}  // namespace newsent
