#include "least_squares.hpp"

#include <fmt/format.h>

#include "newsent/errors.hpp"

namespace newsent::detail {

LeastSquares least_squares(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.rows() != Y.rows()) throw DomainError("least_squares: row mismatch");
    if (X.rows() < X.cols()) {
        throw EstimationError(fmt::format("least_squares: {} observations for {} regressors", X.rows(), X.cols()));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) {
        throw EstimationError(fmt::format("regressor matrix is rank deficient (rank {} of {})", qr.rank(), X.cols()));
    }
    LeastSquares out;
    out.coef = qr.solve(Y);
    out.residuals = Y - X * out.coef;

    const auto k = X.cols();
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    out.xtx_inv = perm * inner * perm.transpose();
    return out;
}

}  // namespace newsent::detail
