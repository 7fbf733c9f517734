#pragma once

#include <span>

#include <Eigen/Core>

#include "egovario/dataset.hpp"
#include "egovario/expfit.hpp"
#include "egovario/kernels.hpp"

namespace egovario {

/// c_ij = c0 + psill - gamma(d_ij); symmetric, total variance on the diagonal.
[[nodiscard]] Eigen::MatrixXd build_covariance_matrix(std::span<const Point> coords, const ExpParams& params,
                                                      kernels::Execution exec = kernels::Execution::parallel);

struct CholeskyFactor {
    Eigen::MatrixXd lower;
    double jitter = 0.0;  ///< relative diagonal loading that was needed (0 if none)
};

/// Relative diagonal loadings tried, in order, when the plain factorization fails.
inline constexpr double kJitterLadder[] = {1e-10, 1e-8, 1e-6};

/// C = L L^T, retrying with jitter * mean(diag) added to the diagonal. Throws NumericalError
/// naming the last jitter when all attempts fail.
[[nodiscard]] CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& c);

struct Decorrelation {
    Eigen::VectorXd x;  ///< L^{-1} y
    CholeskyFactor factor;
};

[[nodiscard]] Decorrelation decorrelate(const Eigen::MatrixXd& c, std::span<const double> y);

/// y* = L x*.
[[nodiscard]] Eigen::VectorXd recorrelate(const Eigen::MatrixXd& lower, const Eigen::VectorXd& x_star);

}  // namespace egovario
