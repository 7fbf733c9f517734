#include "egovario/covariance.hpp"

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "egovario/error.hpp"

namespace egovario {

Eigen::MatrixXd build_covariance_matrix(std::span<const Point> coords, const ExpParams& params,
                                        kernels::Execution exec) {
    validate(params);
    return exec == kernels::Execution::parallel ? kernels::covariance_matrix_parallel(coords, params)
                                                : kernels::covariance_matrix_serial(coords, params);
}

CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& c) {
    if (c.rows() != c.cols()) throw ValidationError("covariance matrix must be square");
    {
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};
    }
    const double mean_diag = c.diagonal().mean();
    double tried = 0.0;
    for (double eps : kJitterLadder) {
        tried = eps;
        Eigen::MatrixXd loaded = c;
        loaded.diagonal().array() += eps * mean_diag;
        Eigen::LLT<Eigen::MatrixXd> llt(loaded);
        if (llt.info() == Eigen::Success) return {llt.matrixL(), eps};
    }
    throw NumericalError(fmt::format("Cholesky factorization failed even with jitter {} x mean diagonal", tried));
}

Decorrelation decorrelate(const Eigen::MatrixXd& c, std::span<const double> y) {
    if (static_cast<Eigen::Index>(y.size()) != c.rows())
        throw ValidationError("data vector length does not match the covariance matrix");
    Decorrelation out;
    out.factor = cholesky_with_jitter(c);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    out.x = out.factor.lower.triangularView<Eigen::Lower>().solve(yv);
    return out;
}

Eigen::VectorXd recorrelate(const Eigen::MatrixXd& lower, const Eigen::VectorXd& x_star) {
    if (lower.cols() != x_star.size()) throw ValidationError("factor and vector dimensions differ");
    return lower.triangularView<Eigen::Lower>() * x_star;
}

}  // namespace egovario
