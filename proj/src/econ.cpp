#include "newsent/econ.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "least_squares.hpp"
#include "newsent/distributions.hpp"
#include "newsent/errors.hpp"

namespace newsent {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Rows t = start..T-1 of [1, M_{t-1}, ..., M_{t-p}].
MatrixXd lagged_design(const MatrixXd& data, int p, Index start) {
    const Index T = data.rows(), m = data.cols();
    MatrixXd X(T - start, 1 + m * p);
    for (Index t = start; t < T; ++t) {
        const Index r = t - start;
        X(r, 0) = 1.0;
        for (int j = 1; j <= p; ++j) X.row(r).segment(1 + (j - 1) * m, m) = data.row(t - j);
    }
    return X;
}

double log_det_spd(const MatrixXd& s) {
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw EstimationError("residual covariance is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

OlsResult fit_ols_ar1x(const MonthlySeries& y, const MonthlySeries& x, int lag) {
    if (y.start != x.start || y.size() != x.size()) throw DomainError("fit_ols_ar1x: y and x are not aligned");
    if (lag < 0) throw DomainError("fit_ols_ar1x: lag must be >= 0");
    const std::size_t T = y.size();
    const std::size_t first = static_cast<std::size_t>(std::max(1, lag));
    if (T < first + 10) {
        throw DomainError(fmt::format("fit_ols_ar1x: only {} usable observations at lag {}", T > first ? T - first : 0, lag));
    }
    const auto n = static_cast<Index>(T - first);
    MatrixXd X(n, 3);
    VectorXd Y(n);
    for (std::size_t t = first; t < T; ++t) {
        const auto r = static_cast<Index>(t - first);
        Y(r) = y.values[t];
        X(r, 0) = 1.0;
        X(r, 1) = y.values[t - 1];
        X(r, 2) = x.values[t - static_cast<std::size_t>(lag)];
    }
    const auto fit = detail::least_squares(X, Y);
    const double dof = static_cast<double>(n - 3);
    const double rss = fit.residuals.squaredNorm();
    const double s2 = rss / dof;
    const double tss = (Y.array() - Y.mean()).square().sum();

    OlsResult r;
    r.lag = lag;
    r.n_used = static_cast<std::size_t>(n);
    r.first_month = y.month_at(first);
    r.alpha = fit.coef(0, 0);
    r.beta = fit.coef(1, 0);
    r.gamma = fit.coef(2, 0);
    r.se_alpha = std::sqrt(s2 * fit.xtx_inv(0, 0));
    r.se_beta = std::sqrt(s2 * fit.xtx_inv(1, 1));
    r.se_gamma = std::sqrt(s2 * fit.xtx_inv(2, 2));
    auto pval = [&](double coef, double se) { return se > 0.0 ? dist::student_t_two_sided_p(coef / se, dof) : 0.0; };
    r.p_alpha = pval(r.alpha, r.se_alpha);
    r.p_beta = pval(r.beta, r.se_beta);
    r.p_gamma = pval(r.gamma, r.se_gamma);
    r.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    r.residuals = fit.residuals.col(0);
    return r;
}

std::vector<PathCell> coefficient_path(const MonthlySeries& y, const MonthlySeries& x, int max_lag) {
    if (max_lag < 0) throw DomainError("coefficient_path: max_lag must be >= 0");
    std::vector<PathCell> cells;
    for (int lag = 0; lag <= max_lag; ++lag) {
        PathCell cell;
        cell.lag = lag;
        try {
            cell.result = fit_ols_ar1x(y, x, lag);
        } catch (const DomainError& e) {
            cell.error = e.what();
        } catch (const EstimationError& e) {
            cell.error = e.what();
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::string VarModel::regressor_name(std::size_t row) const {
    if (row == 0) return "C";
    const std::size_t lag = (row - 1) / m() + 1;
    const std::size_t var = (row - 1) % m();
    return fmt::format("{}(-{})", names[var], lag);
}

VarModel fit_var(const MatrixXd& data, int p, std::vector<std::string> names) {
    if (p < 1) throw DomainError("fit_var: lag order must be >= 1");
    const Index T = data.rows(), m = data.cols();
    if (m < 1) throw DomainError("fit_var: no variables");
    if (names.empty()) {
        for (Index j = 0; j < m; ++j) names.push_back(fmt::format("y{}", j + 1));
    }
    if (static_cast<Index>(names.size()) != m) throw DomainError("fit_var: one name per column required");
    const Index k = 1 + m * p;
    if (T - p <= k) {
        throw DomainError(fmt::format("fit_var: {} observations cannot support VAR({}) in {} variables", T, p, m));
    }
    const MatrixXd X = lagged_design(data, p, p);
    const MatrixXd Y = data.bottomRows(T - p);
    const auto fit = detail::least_squares(X, Y);

    VarModel model;
    model.p = p;
    model.names = std::move(names);
    model.t_effective = static_cast<std::size_t>(T - p);
    model.coef = fit.coef;
    model.xtx_inv = fit.xtx_inv;
    model.residuals = fit.residuals;
    model.intercept = fit.coef.row(0).transpose();
    for (int j = 1; j <= p; ++j) {
        model.lags.push_back(fit.coef.middleRows(1 + (j - 1) * m, m).transpose());
    }
    const double n = static_cast<double>(T - p);
    const MatrixXd ete = fit.residuals.transpose() * fit.residuals;
    model.residual_cov = ete / (n - static_cast<double>(k));
    model.residual_cov = 0.5 * (model.residual_cov + model.residual_cov.transpose());
    model.residual_cov_ml = ete / n;
    model.residual_cov_ml = 0.5 * (model.residual_cov_ml + model.residual_cov_ml.transpose());

    model.std_errors.resize(k, m);
    model.t_stats.resize(k, m);
    model.r_squared.resize(m);
    model.adj_r_squared.resize(m);
    for (Index eq = 0; eq < m; ++eq) {
        for (Index r = 0; r < k; ++r) {
            const double se = std::sqrt(model.residual_cov(eq, eq) * fit.xtx_inv(r, r));
            model.std_errors(r, eq) = se;
            model.t_stats(r, eq) = fit.coef(r, eq) / se;
        }
        const double rss = fit.residuals.col(eq).squaredNorm();
        const double tss = (Y.col(eq).array() - Y.col(eq).mean()).square().sum();
        const double r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
        model.r_squared(eq) = r2;
        model.adj_r_squared(eq) = 1.0 - (1.0 - r2) * (n - 1.0) / (n - static_cast<double>(k));
    }
    return model;
}

VarModel fit_var(const MultiSeries& data, int p) {
    auto model = fit_var(data.values, p, data.names);
    model.sample_start = add_months(data.start, p);
    return model;
}

VarModel reorder(const VarModel& model, const std::vector<std::string>& order) {
    const std::size_t m = model.m();
    if (order.size() != m) throw DomainError("reorder: ordering must list every variable once");
    std::vector<Index> src(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto it = std::find(model.names.begin(), model.names.end(), order[i]);
        if (it == model.names.end()) throw DomainError(fmt::format("reorder: unknown variable '{}'", order[i]));
        src[i] = static_cast<Index>(it - model.names.begin());
    }
    {
        auto sorted = src;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw DomainError("reorder: ordering repeats a variable");
        }
    }
    const auto M = static_cast<Index>(m);
    const auto k = static_cast<Index>(model.regressors());
    std::vector<Index> row_src(static_cast<std::size_t>(k));
    row_src[0] = 0;
    for (int lag = 1; lag <= model.p; ++lag) {
        for (Index i = 0; i < M; ++i) row_src[static_cast<std::size_t>(1 + (lag - 1) * M + i)] = 1 + (lag - 1) * M + src[static_cast<std::size_t>(i)];
    }
    auto sq = [&](const MatrixXd& a) {
        MatrixXd b(M, M);
        for (Index i = 0; i < M; ++i)
            for (Index j = 0; j < M; ++j) b(i, j) = a(src[static_cast<std::size_t>(i)], src[static_cast<std::size_t>(j)]);
        return b;
    };
    auto coefs = [&](const MatrixXd& a) {
        MatrixXd b(k, M);
        for (Index r = 0; r < k; ++r)
            for (Index j = 0; j < M; ++j) b(r, j) = a(row_src[static_cast<std::size_t>(r)], src[static_cast<std::size_t>(j)]);
        return b;
    };

    VarModel out = model;
    out.names = order;
    for (Index i = 0; i < M; ++i) {
        const auto s = src[static_cast<std::size_t>(i)];
        out.intercept(i) = model.intercept(s);
        out.r_squared(i) = model.r_squared(s);
        out.adj_r_squared(i) = model.adj_r_squared(s);
        out.residuals.col(i) = model.residuals.col(s);
    }
    for (std::size_t j = 0; j < model.lags.size(); ++j) out.lags[j] = sq(model.lags[j]);
    out.residual_cov = sq(model.residual_cov);
    out.residual_cov_ml = sq(model.residual_cov_ml);
    out.coef = coefs(model.coef);
    out.std_errors = coefs(model.std_errors);
    out.t_stats = coefs(model.t_stats);
    for (Index r = 0; r < k; ++r)
        for (Index c = 0; c < k; ++c)
            out.xtx_inv(r, c) = model.xtx_inv(row_src[static_cast<std::size_t>(r)], row_src[static_cast<std::size_t>(c)]);
    return out;
}

LagSelection select_lag(const MatrixXd& data, int max_lag) {
    if (max_lag < 0) throw DomainError("select_lag: max_lag must be >= 0");
    const Index T = data.rows(), m = data.cols();
    const Index k_max = 1 + m * max_lag;
    if (T - max_lag <= k_max) {
        throw DomainError(fmt::format("select_lag: {} observations cannot support max_lag {} in {} variables", T, max_lag, m));
    }
    LagSelection sel;
    sel.t_effective = static_cast<std::size_t>(T - max_lag);
    const double n = static_cast<double>(sel.t_effective);
    const MatrixXd Y = data.bottomRows(T - max_lag);
    for (int lag = 0; lag <= max_lag; ++lag) {
        const MatrixXd X = lagged_design(data, lag, max_lag);
        const auto fit = detail::least_squares(X, Y);
        const MatrixXd sigma = fit.residuals.transpose() * fit.residuals / n;
        LagCriteria row;
        row.lag = lag;
        row.log_det = log_det_spd(0.5 * (sigma + sigma.transpose()));
        row.params = static_cast<std::size_t>(m * (1 + m * lag));
        const double kp = static_cast<double>(row.params);
        row.aic = row.log_det + 2.0 * kp / n;
        row.bic = row.log_det + kp * std::log(n) / n;
        row.hq = row.log_det + 2.0 * kp * std::log(std::log(n)) / n;
        sel.rows.push_back(row);
    }
    auto argmin = [&](auto field) {
        const auto it = std::min_element(sel.rows.begin(), sel.rows.end(),
                                         [&](const LagCriteria& a, const LagCriteria& b) { return a.*field < b.*field; });
        return it->lag;
    };
    sel.aic_lag = argmin(&LagCriteria::aic);
    sel.bic_lag = argmin(&LagCriteria::bic);
    sel.hq_lag = argmin(&LagCriteria::hq);
    return sel;
}

double spectral_radius(const VarModel& model) {
    const auto m = static_cast<Index>(model.m());
    const Index n = m * model.p;
    MatrixXd companion = MatrixXd::Zero(n, n);
    for (int j = 0; j < model.p; ++j) companion.block(0, j * m, m, m) = model.lags[static_cast<std::size_t>(j)];
    if (model.p > 1) companion.bottomLeftCorner(n - m, n - m).setIdentity();
    Eigen::EigenSolver<MatrixXd> es(companion, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<MatrixXd> ma_coefficients(const VarModel& model, int horizons) {
    if (horizons < 0) throw DomainError("ma_coefficients: horizons must be >= 0");
    const auto m = static_cast<Index>(model.m());
    std::vector<MatrixXd> psi;
    psi.push_back(MatrixXd::Identity(m, m));
    for (int h = 1; h <= horizons; ++h) {
        MatrixXd acc = MatrixXd::Zero(m, m);
        for (int j = 1; j <= std::min(h, model.p); ++j) {
            acc += model.lags[static_cast<std::size_t>(j - 1)] * psi[static_cast<std::size_t>(h - j)];
        }
        psi.push_back(std::move(acc));
    }
    return psi;
}

IrfResult irf_cholesky(const VarModel& model, int horizons) {
    Eigen::LLT<MatrixXd> llt(model.residual_cov);
    if (llt.info() != Eigen::Success) throw EstimationError("irf_cholesky: residual covariance is not positive definite");
    const MatrixXd L = llt.matrixL();
    IrfResult r;
    r.horizons = horizons;
    r.ordering = model.names;
    r.spectral_radius = spectral_radius(model);
    r.stable = r.spectral_radius < 1.0;
    if (!r.stable) {
        r.warnings.push_back(fmt::format("VAR is not stable: companion spectral radius {:.6f} >= 1", r.spectral_radius));
    }
    for (auto& psi : ma_coefficients(model, horizons)) r.responses.push_back(psi * L);
    return r;
}

IrfBands irf_bootstrap_bands(const MatrixXd& data, const VarModel& model, int horizons, int draws,
                             std::uint64_t seed, double level) {
    if (draws < 1) throw DomainError("irf_bootstrap_bands: draws must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw DomainError("irf_bootstrap_bands: level must lie in (0, 1)");
    const Index T = data.rows(), m = data.cols();
    const int p = model.p;
    if (m != static_cast<Index>(model.m())) throw DomainError("irf_bootstrap_bands: data does not match the model");
    const MatrixXd centred = model.residuals.rowwise() - model.residuals.colwise().mean();
    const Index n_res = centred.rows();

    std::mt19937_64 rng(seed);
    std::vector<std::vector<MatrixXd>> samples;
    for (int d = 0; d < draws; ++d) {
        MatrixXd sim(T, m);
        sim.topRows(p) = data.topRows(p);
        for (Index t = p; t < T; ++t) {
            VectorXd y = model.intercept;
            for (int j = 1; j <= p; ++j) y += model.lags[static_cast<std::size_t>(j - 1)] * sim.row(t - j).transpose();
            const auto pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(n_res));
            sim.row(t) = (y + centred.row(pick).transpose()).transpose();
        }
        try {
            samples.push_back(irf_cholesky(fit_var(sim, p, model.names), horizons).responses);
        } catch (const EstimationError&) {
            // degenerate resample; dropped from the band
        }
    }
    IrfBands bands;
    bands.draws = static_cast<int>(samples.size());
    bands.level = level;
    if (samples.empty()) throw EstimationError("irf_bootstrap_bands: every bootstrap draw failed");
    const double lo_q = 0.5 * (1.0 - level), hi_q = 1.0 - lo_q;
    std::vector<double> cell(samples.size());
    for (int h = 0; h <= horizons; ++h) {
        MatrixXd lo(m, m), hi(m, m);
        for (Index i = 0; i < m; ++i) {
            for (Index j = 0; j < m; ++j) {
                for (std::size_t s = 0; s < samples.size(); ++s) cell[s] = samples[s][static_cast<std::size_t>(h)](i, j);
                std::sort(cell.begin(), cell.end());
                auto quantile = [&](double q) {
                    const double pos = q * static_cast<double>(cell.size() - 1);
                    const auto a = static_cast<std::size_t>(std::floor(pos));
                    const auto b = std::min(a + 1, cell.size() - 1);
                    return cell[a] + (pos - static_cast<double>(a)) * (cell[b] - cell[a]);
                };
                lo(i, j) = quantile(lo_q);
                hi(i, j) = quantile(hi_q);
            }
        }
        bands.lower.push_back(std::move(lo));
        bands.upper.push_back(std::move(hi));
    }
    return bands;
}

double wald_statistic(const VectorXd& b, const MatrixXd& cov, const std::vector<std::size_t>& rows) {
    const auto q = static_cast<Index>(rows.size());
    VectorXd rb(q);
    MatrixXd rvr(q, q);
    for (Index i = 0; i < q; ++i) {
        const auto ri = static_cast<Index>(rows[static_cast<std::size_t>(i)]);
        rb(i) = b(ri);
        for (Index j = 0; j < q; ++j) rvr(i, j) = cov(ri, static_cast<Index>(rows[static_cast<std::size_t>(j)]));
    }
    Eigen::FullPivLU<MatrixXd> lu(rvr);
    if (!lu.isInvertible()) throw EstimationError("Wald test: R V R' is singular");
    return rb.dot(lu.solve(rb));
}

GrangerResult granger_wald(const VarModel& model) {
    const std::size_t m = model.m();
    const int p = model.p;
    if (model.xtx_inv.rows() != static_cast<Index>(model.regressors())) {
        throw DomainError("granger_wald: model carries no coefficient covariance");
    }
    GrangerResult result;
    for (std::size_t eq = 0; eq < m; ++eq) {
        GrangerEquation equation;
        equation.dependent = model.names[eq];
        const VectorXd b = model.coef.col(static_cast<Index>(eq));
        const MatrixXd V = model.residual_cov(static_cast<Index>(eq), static_cast<Index>(eq)) * model.xtx_inv;
        auto run = [&](std::string label, const std::vector<std::size_t>& rows) {
            GrangerTest test;
            test.excluded = std::move(label);
            test.df = static_cast<int>(rows.size());
            try {
                test.chi_sq = wald_statistic(b, V, rows);
                test.p_value = dist::chi_square_upper_p(test.chi_sq, test.df);
            } catch (const EstimationError& e) {
                test.ok = false;
                test.error = e.what();
                test.p_value = std::numeric_limits<double>::quiet_NaN();
            }
            equation.tests.push_back(std::move(test));
        };
        std::vector<std::size_t> all_rows;
        for (std::size_t ex = 0; ex < m; ++ex) {
            if (ex == eq) continue;
            std::vector<std::size_t> rows;
            for (int lag = 1; lag <= p; ++lag) rows.push_back(model.regressor_row(ex, lag));
            all_rows.insert(all_rows.end(), rows.begin(), rows.end());
            run(model.names[ex], rows);
        }
        if (m > 1) {
            std::sort(all_rows.begin(), all_rows.end());
            run("All", all_rows);
        }
        result.equations.push_back(std::move(equation));
    }
    return result;
}

}  // namespace newsent
