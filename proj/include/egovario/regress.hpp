#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egovario/dataset.hpp"

namespace egovario {

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double t_value = 0.0;
    double p_value = 0.0;
};

struct OlsFit {
    std::string response;
    std::vector<Coefficient> coefficients;  ///< "(Intercept)" first, then predictors in order
    double residual_sd = 0.0;
    std::size_t df_residual = 0;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    double f_statistic = 0.0;
    std::vector<double> fitted;
    std::vector<double> residuals;
    std::vector<double> leverage;  ///< hat-matrix diagonal
    std::vector<double> studentized_residuals;
    std::vector<std::size_t> row_index_map;  ///< fit row -> dataset record index
    std::size_t n_source_rows = 0;

    [[nodiscard]] std::size_t n_used() const noexcept { return residuals.size(); }
    [[nodiscard]] std::size_t n_coefficients() const noexcept { return coefficients.size(); }
};

/**
 * Least squares via column-pivoted QR of the design. X must include the
 * intercept column if one is wanted; `names` labels its columns. Throws
 * ValidationError naming the first column that is a linear combination of the
 * preceding ones, or when there are no residual degrees of freedom.
 */
[[nodiscard]] OlsFit fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             const std::vector<std::string>& names);

/// response ~ 1 + predictors, dropping records with any missing value among them.
[[nodiscard]] OlsFit fit_ols(const SpatialDataset& ds, const std::string& response,
                             const std::vector<std::string>& predictors);

/// Internally studentized residuals e_i / (s sqrt(1 - h_ii)).
/// Throws NumericalError for a row whose leverage is numerically 1.
[[nodiscard]] std::vector<double> studentized_residuals(const OlsFit& fit);

/// Dataset of (x, y, studentized residual) for the records the fit used.
[[nodiscard]] SpatialDataset vario_reg_prep(const OlsFit& fit, const SpatialDataset& ds);

/// Coefficient table (Estimate, Std. Error, t value, Pr(>|t|)) plus residual SE, R^2 and F.
[[nodiscard]] std::string format_regression_summary(const OlsFit& fit);

}  // namespace egovario
