#include "egovario/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "egovario/error.hpp"

namespace egovario {

namespace {

// Index of the first column that adds no rank, or -1 when the design has full column rank.
Eigen::Index first_dependent_column(const Eigen::MatrixXd& x) {
    for (Eigen::Index k = 1; k <= x.cols(); ++k) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.leftCols(k));
        if (qr.rank() < k) return k - 1;
    }
    return -1;
}

std::vector<double> studentize(const OlsFit& fit, bool strict);

}  // namespace

OlsFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (static_cast<Eigen::Index>(names.size()) != p) throw ValidationError("one name per design column expected");
    if (y.size() != n) throw ValidationError("response length does not match the design");
    if (n <= p)
        throw ValidationError(fmt::format("regression needs more rows than coefficients ({} rows, {} coefficients)", n, p));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) {
        const auto bad = first_dependent_column(x);
        throw ValidationError(fmt::format("singular design: column '{}' is linearly dependent on earlier columns",
                                          names[static_cast<std::size_t>(std::max<Eigen::Index>(bad, 0))]));
    }
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd fitted = x * beta;
    const Eigen::VectorXd resid = y - fitted;

    // Thin Q gives h_ii = ||Q_i||^2 and (X^T X)^{-1} = P R^{-1} R^{-T} P^T.
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
    const Eigen::MatrixXd xtx_inv = qr.colsPermutation() * xtx_inv_perm * qr.colsPermutation().transpose();

    OlsFit fit;
    fit.df_residual = static_cast<std::size_t>(n - p);
    const double rss = resid.squaredNorm();
    const double sigma2 = rss / static_cast<double>(n - p);
    fit.residual_sd = std::sqrt(sigma2);

    const bool has_intercept = (x.col(0).array() == 1.0).all();
    const double ybar = y.mean();
    const double tss = has_intercept ? (y.array() - ybar).square().sum() : y.squaredNorm();
    fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    const double df_int = has_intercept ? 1.0 : 0.0;
    fit.adj_r_squared =
        1.0 - (1.0 - fit.r_squared) * (static_cast<double>(n) - df_int) / static_cast<double>(n - p);
    const double df_model = static_cast<double>(p) - df_int;
    fit.f_statistic = df_model > 0.0 && rss > 0.0 ? ((tss - rss) / df_model) / sigma2 : 0.0;

    const boost::math::students_t tdist(static_cast<double>(n - p));
    for (Eigen::Index k = 0; k < p; ++k) {
        Coefficient c;
        c.name = names[static_cast<std::size_t>(k)];
        c.estimate = beta[k];
        c.std_error = fit.residual_sd * std::sqrt(xtx_inv(k, k));
        c.t_value = c.std_error > 0.0 ? c.estimate / c.std_error : 0.0;
        c.p_value = c.std_error > 0.0 ? 2.0 * boost::math::cdf(boost::math::complement(tdist, std::fabs(c.t_value)))
                                      : 0.0;
        fit.coefficients.push_back(c);
    }
    fit.fitted.assign(fitted.data(), fitted.data() + n);
    fit.residuals.assign(resid.data(), resid.data() + n);
    fit.leverage.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) fit.leverage[static_cast<std::size_t>(i)] = q.row(i).squaredNorm();
    fit.row_index_map.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < fit.row_index_map.size(); ++i) fit.row_index_map[i] = i;
    fit.n_source_rows = static_cast<std::size_t>(n);
    fit.studentized_residuals = studentize(fit, false);
    return fit;
}

OlsFit fit_ols(const SpatialDataset& ds, const std::string& response, const std::vector<std::string>& predictors) {
    const auto yc = ds.column(response);
    std::vector<std::vector<std::optional<double>>> xc;
    for (const auto& name : predictors) xc.push_back(ds.column(name));

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        bool complete = yc[i].has_value();
        for (const auto& col : xc) complete = complete && col[i].has_value();
        if (complete) rows.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(predictors.size() + 1);
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::size_t i = rows[static_cast<std::size_t>(r)];
        y[r] = *yc[i];
        x(r, 0) = 1.0;
        for (std::size_t k = 0; k < xc.size(); ++k) x(r, static_cast<Eigen::Index>(k) + 1) = *xc[k][i];
    }
    std::vector<std::string> names{"(Intercept)"};
    names.insert(names.end(), predictors.begin(), predictors.end());

    OlsFit fit = fit_ols(x, y, names);
    fit.response = response;
    fit.row_index_map = std::move(rows);
    fit.n_source_rows = ds.size();
    return fit;
}

std::vector<double> studentized_residuals(const OlsFit& fit) { return studentize(fit, true); }

namespace {

// Degenerate-leverage rows throw when strict, otherwise come back as NaN.
std::vector<double> studentize(const OlsFit& fit, bool strict) {
    std::vector<double> out(fit.residuals.size(), 0.0);
    if (fit.leverage.size() != fit.residuals.size()) throw ValidationError("fit has inconsistent leverage/residuals");
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double one_minus_h = 1.0 - fit.leverage[i];
        if (one_minus_h <= 1e-10) {
            if (!strict) {
                out[i] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            throw NumericalError(fmt::format("row {} has leverage {} (numerically 1); studentized residual undefined",
                                             i + 1, fit.leverage[i]));
        }
        if (fit.residual_sd == 0.0) continue;
        out[i] = fit.residuals[i] / (fit.residual_sd * std::sqrt(one_minus_h));
    }
    return out;
}

}  // namespace

SpatialDataset vario_reg_prep(const OlsFit& fit, const SpatialDataset& ds) {
    if (fit.n_source_rows != ds.size() || fit.row_index_map.size() != fit.studentized_residuals.size())
        throw ValidationError("regression fit does not belong to this dataset (row map mismatch)");
    std::vector<Record> records;
    records.reserve(fit.row_index_map.size());
    for (std::size_t r = 0; r < fit.row_index_map.size(); ++r) {
        const std::size_t i = fit.row_index_map[r];
        if (i >= ds.size()) throw ValidationError("regression row map points outside the dataset");
        if (!std::isfinite(fit.studentized_residuals[r]))
            throw NumericalError(fmt::format("fit row {} has leverage 1; no studentized residual", r + 1));
        Record rec;
        rec.x = ds[i].x;
        rec.y = ds[i].y;
        rec.outcome = fit.studentized_residuals[r];
        records.push_back(std::move(rec));
    }
    return SpatialDataset({"x", "y", "residual"}, std::move(records), ds.source_name() + " (studentized residuals)");
}

std::string format_regression_summary(const OlsFit& fit) {
    std::string out = "Coefficients:\n";
    std::size_t name_w = 0;
    for (const auto& c : fit.coefficients) name_w = std::max(name_w, c.name.size());
    out += fmt::format("{:<{}} {:>12} {:>12} {:>10} {:>12}\n", "", name_w, "Estimate", "Std. Error", "t value",
                       "Pr(>|t|)");
    for (const auto& c : fit.coefficients)
        out += fmt::format("{:<{}} {:>12.7g} {:>12.5g} {:>10.4g} {:>12.4g}\n", c.name, name_w, c.estimate, c.std_error,
                           c.t_value, c.p_value);
    out += fmt::format("\nResidual standard error: {:.4g} on {} degrees of freedom\n", fit.residual_sd,
                       fit.df_residual);
    out += fmt::format("Multiple R-squared: {:.4g},\tAdjusted R-squared: {:.4g}\n", fit.r_squared, fit.adj_r_squared);
    const std::size_t df_model = fit.coefficients.size() > 0 ? fit.coefficients.size() - 1 : 0;
    if (df_model > 0) {
        const boost::math::fisher_f fdist(static_cast<double>(df_model), static_cast<double>(fit.df_residual));
        const double pf = fit.f_statistic > 0.0 ? boost::math::cdf(boost::math::complement(fdist, fit.f_statistic)) : 1.0;
        out += fmt::format("F-statistic: {:.4g} on {} and {} DF,  p-value: {:.4g}\n", fit.f_statistic, df_model,
                           fit.df_residual, pf);
    }
    return out;
}

}  // namespace egovario
