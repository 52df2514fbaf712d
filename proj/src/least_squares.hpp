#pragma once

#include <Eigen/Dense>

namespace newsent::detail {

/// Least-squares solution of X B = Y for one or more right-hand sides, through a
/// column-pivoted QR. Throws EstimationError when X is rank deficient.
struct LeastSquares {
    Eigen::MatrixXd coef;       // k x r
    Eigen::MatrixXd residuals;  // n x r
    Eigen::MatrixXd xtx_inv;    // k x k, (X'X)^{-1}
};

LeastSquares least_squares(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

}  // namespace newsent::detail
