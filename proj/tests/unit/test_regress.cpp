#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "egovario/error.hpp"
#include "egovario/regress.hpp"
#include "egovario/variogram.hpp"
#include "oracles.hpp"

using namespace egovario;

namespace {

Eigen::MatrixXd random_design(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < p; ++j) x(i, j) = g(rng) * static_cast<double>(j);
    }
    return x;
}

std::vector<std::string> names(Eigen::Index p) {
    std::vector<std::string> out{"(Intercept)"};
    for (Eigen::Index j = 1; j < p; ++j) out.push_back("x" + std::to_string(j));
    return out;
}

}  // namespace

TEST_CASE("exactly linear data", "[regress]") {
    Eigen::MatrixXd x(5, 2);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = i;
        y(i) = 2.0 * i;
    }
    const auto fit = fit_ols(x, y, {"(Intercept)", "x"});
    CHECK(fit.coefficients[1].estimate == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(fit.coefficients[0].estimate) < 1e-12);
    CHECK(fit.residual_sd < 1e-12);
}

TEST_CASE("coefficients match the normal equations", "[regress]") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g;
    for (auto [n, p] : {std::pair<Eigen::Index, Eigen::Index>{50, 3}, {100, 4}}) {
        const auto x = random_design(n, p, rng);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = 1.0 + 0.5 * x(i, 1) - 0.25 * x(i, p - 1) + g(rng);
        const auto fit = fit_ols(x, y, names(p));
        const Eigen::VectorXd beta = oracle::normal_equations(x, y);
        for (Eigen::Index j = 0; j < p; ++j) {
            CHECK(fit.coefficients[j].estimate == Catch::Approx(beta(j)).epsilon(1e-9).margin(1e-12));
        }
        // Standard errors from the explicit inverse.
        Eigen::VectorXd e = y - x * beta;
        const double s2 = e.squaredNorm() / static_cast<double>(n - p);
        const Eigen::MatrixXd inv = (x.transpose() * x).inverse();
        for (Eigen::Index j = 0; j < p; ++j) {
            CHECK(fit.coefficients[j].std_error == Catch::Approx(std::sqrt(s2 * inv(j, j))).epsilon(1e-9));
        }
        CHECK(fit.df_residual == static_cast<std::size_t>(n - p));

        double hsum = 0.0;
        for (double h : fit.leverage) {
            CHECK(h >= 0.0);
            CHECK(h < 1.0);
            hsum += h;
        }
        CHECK(hsum == Catch::Approx(static_cast<double>(p)).epsilon(1e-10));

        Eigen::VectorXd res = Eigen::Map<const Eigen::VectorXd>(fit.residuals.data(), n);
        const Eigen::VectorXd xte = x.transpose() * res;
        CHECK(xte.cwiseAbs().maxCoeff() <= 1e-8 * y.norm());
        for (Eigen::Index i = 0; i < n; ++i) {
            CHECK(fit.fitted[i] + fit.residuals[i] == Catch::Approx(y(i)).epsilon(1e-10));
        }
    }
}

TEST_CASE("four-point hat matrix by hand", "[regress]") {
    // x = 1..4: h_ii = 1/4 + (x_i - 2.5)^2 / 5.
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, 1, 2, 1, 3, 1, 4;
    Eigen::VectorXd y(4);
    y << 1.0, 3.0, 2.0, 5.0;
    const auto fit = fit_ols(x, y, {"(Intercept)", "x"});
    const double h[] = {0.7, 0.3, 0.3, 0.7};
    // Hand fit: slope 1.1, intercept 0, residuals (-0.1, 0.8, -1.3, 0.6), s^2 = 2.7 / 2.
    const double e[] = {-0.1, 0.8, -1.3, 0.6};
    const double s = std::sqrt(1.35);
    for (int i = 0; i < 4; ++i) {
        CHECK(fit.leverage[i] == Catch::Approx(h[i]).epsilon(1e-12));
        CHECK(fit.residuals[i] == Catch::Approx(e[i]).epsilon(1e-12));
        CHECK(fit.studentized_residuals[i] == Catch::Approx(e[i] / (s * std::sqrt(1 - h[i]))).epsilon(1e-12));
    }
    CHECK(studentized_residuals(fit) == fit.studentized_residuals);
}

TEST_CASE("constant leverage makes studentized residuals proportional", "[regress]") {
    // Columns of a 4x4 Hadamard matrix: orthogonal, equal leverage p/n.
    Eigen::MatrixXd x(8, 2);
    x << 1, 1, 1, -1, 1, 1, 1, -1, 1, 1, 1, -1, 1, 1, 1, -1;
    Eigen::VectorXd y(8);
    y << 0.3, -1.2, 2.2, 0.1, -0.7, 1.9, 0.4, -0.5;
    const auto fit = fit_ols(x, y, {"(Intercept)", "x"});
    const double k = 1.0 / (fit.residual_sd * std::sqrt(1.0 - 2.0 / 8.0));
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(fit.leverage[i] == Catch::Approx(0.25).epsilon(1e-12));
        CHECK(fit.studentized_residuals[i] == Catch::Approx(k * fit.residuals[i]).epsilon(1e-12).margin(1e-14));
    }
}

TEST_CASE("singular designs and size errors", "[regress]") {
    Eigen::MatrixXd x(5, 3);
    x << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;
    Eigen::VectorXd y(5);
    y << 1, 2, 3, 4, 6;
    try {
        (void)fit_ols(x, y, {"(Intercept)", "a", "double_a"});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("double_a") != std::string::npos);
    }
    Eigen::MatrixXd small(2, 2);
    small << 1, 0, 1, 1;
    Eigen::VectorXd ys(2);
    ys << 1, 2;
    CHECK_THROWS_AS(fit_ols(small, ys, {"(Intercept)", "a"}), ValidationError);
}

TEST_CASE("leverage-one rows have no studentized residual", "[regress]") {
    // Indicator column isolates row 0.
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, 1, 0, 1, 0, 1, 0;
    Eigen::VectorXd y(4);
    y << 5, 1, 2, 3;
    const auto fit = fit_ols(x, y, {"(Intercept)", "d"});
    CHECK(std::isnan(fit.studentized_residuals[0]));
    CHECK_THROWS_AS(studentized_residuals(fit), NumericalError);
}

TEST_CASE("dataset regression drops incomplete rows", "[regress]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::ostringstream text;
    text << "x,y,w,a,b\n";
    const int n = 120;
    for (int i = 0; i < n; ++i) {
        const double a = g(rng), b = g(rng);
        const double w = 3.0 + 2.0 * a - b + g(rng);
        text << i * 10.0 << ',' << (i % 7) * 13.0 << ',' << w << ',';
        if (i % 12 == 5)
            text << "NA";
        else
            text << a;
        text << ',' << b << '\n';
    }
    std::istringstream in(text.str());
    const auto ds = load_dataset(in, "reg");
    const auto fit = fit_ols(ds, "w", {"a", "b"});
    CHECK(fit.n_used() == n - 10);
    CHECK(fit.n_source_rows == static_cast<std::size_t>(n));
    CHECK(fit.coefficients[0].name == "(Intercept)");
    CHECK(fit.coefficients[1].name == "a");
    for (std::size_t r = 0; r < fit.row_index_map.size(); ++r) CHECK(fit.row_index_map[r] % 12 != 5);

    const auto prep = vario_reg_prep(fit, ds);
    CHECK(prep.size() == static_cast<std::size_t>(n - 10));
    CHECK(prep.column_names() == std::vector<std::string>{"x", "y", "residual"});
    CHECK(prep[0].x == ds[fit.row_index_map[0]].x);
    CHECK(*prep[3].outcome == fit.studentized_residuals[3]);
    const auto z = prep.observed_outcomes();
    CHECK(std::abs(sample_variance(z) - 1.0) < 0.1);

    CHECK_THROWS_AS(fit_ols(ds, "nope", {"a"}), ValidationError);

    const auto summary = format_regression_summary(fit);
    for (const char* s : {"Estimate", "Std. Error", "t value", "Residual standard error", "R-squared", "F-statistic"})
        CHECK(summary.find(s) != std::string::npos);
}
