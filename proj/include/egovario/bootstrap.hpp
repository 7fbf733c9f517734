#pragma once

// Filtered generalized bootstrap for exponential semi-variogram parameters:
// normal-score transform, decorrelate with the Cholesky factor of the fitted
// covariance, resample, recorrelate, back-transform, refit, and discard
// replicates whose model variance exceeds tau times the sample variance or
// whose fit did not converge.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egovario/covariance.hpp"
#include "egovario/dataset.hpp"
#include "egovario/error.hpp"
#include "egovario/expfit.hpp"
#include "egovario/variogram.hpp"

namespace egovario {

[[nodiscard]] double standard_normal_quantile(double p);

/// Knots (z_k, y_k) of the empirical normal-score map, one per distinct data value.
class NormalScoreTable {
public:
    NormalScoreTable() = default;
    NormalScoreTable(std::vector<double> z, std::vector<double> y, std::vector<double> p);

    /// Linear interpolation between knots, clamped to [z_1, z_K] outside [y_1, y_K].
    [[nodiscard]] double back_transform(double y) const;

    [[nodiscard]] const std::vector<double>& z() const noexcept { return z_; }
    [[nodiscard]] const std::vector<double>& y() const noexcept { return y_; }
    [[nodiscard]] const std::vector<double>& plotting_positions() const noexcept { return p_; }

private:
    std::vector<double> z_;
    std::vector<double> y_;
    std::vector<double> p_;
};

struct NormalScores {
    std::vector<double> y;
    NormalScoreTable table;
};

/// y_i = Phi^{-1}((rank_i - 0.5) / n) with average ranks for ties.
/// Throws NumericalError when z has fewer than two distinct values.
[[nodiscard]] NormalScores normal_score_transform(std::span<const double> z);

[[nodiscard]] std::vector<double> normal_score_back_transform(std::span<const double> y_star,
                                                              const NormalScoreTable& table);

struct BootstrapConfig {
    std::size_t B = 1000;                ///< accepted replicates wanted
    double threshold_factor = 3.0;       ///< tau
    std::optional<std::uint64_t> seed;   ///< drawn from std::random_device when absent
    double max_attempt_factor = 10.0;    ///< attempts are capped at factor * B
    int workers = 0;                     ///< OpenMP threads for replicates; 0 = runtime default
};

void validate(const BootstrapConfig& cfg);

enum class FilterDecision { accept, discard_variance, discard_nonconvergence };

[[nodiscard]] const char* to_string(FilterDecision d) noexcept;

struct Candidate {
    ExpParams params;
    bool converged = false;
    std::string failure;  ///< set when the refit threw
};

/// Non-convergence takes precedence; otherwise discard when c0* + psill* > tau * sample_variance.
[[nodiscard]] FilterDecision apply_filter(const Candidate& candidate, double sample_variance, double tau);

/**
 * Everything the replicates share, computed once from the data and the
 * original model: normal scores, the refit on the Gaussian scale, the Cholesky
 * factor of its covariance, the decorrelated vector, and the pair binning.
 */
class BootstrapSetup {
public:
    BootstrapSetup(const SpatialDataset& ds, const ExpModelFit& model);
    BootstrapSetup(std::vector<Point> coords, std::vector<double> z, double max_dist, std::size_t nbins);

    [[nodiscard]] const std::vector<Point>& coords() const noexcept { return coords_; }
    [[nodiscard]] const std::vector<double>& outcomes() const noexcept { return z_; }
    [[nodiscard]] const NormalScores& scores() const noexcept { return scores_; }
    [[nodiscard]] const ExpModelFit& gaussian_fit() const noexcept { return gaussian_fit_; }
    [[nodiscard]] const Eigen::MatrixXd& lower() const noexcept { return factor_.lower; }
    [[nodiscard]] double jitter() const noexcept { return factor_.jitter; }
    [[nodiscard]] const Eigen::VectorXd& decorrelated() const noexcept { return x_; }
    [[nodiscard]] double sample_variance() const noexcept { return sample_variance_; }
    [[nodiscard]] const PairBinning& binning() const noexcept { return binning_; }

private:
    std::vector<Point> coords_;
    std::vector<double> z_;
    double sample_variance_ = 0.0;
    NormalScores scores_;
    ExpModelFit gaussian_fit_;
    CholeskyFactor factor_;
    Eigen::VectorXd x_;
    PairBinning binning_;
};

/// Independent stream for replicate `index`; depends only on (seed, index).
[[nodiscard]] std::mt19937_64 replicate_stream(std::uint64_t seed, std::uint64_t index);

enum class Resampling {
    with_replacement,
    identity,  ///< skip the resampling step (pipeline checks)
};

/// One replicate: resample, recorrelate, back-transform, variogram, refit. Never throws for fit failures.
[[nodiscard]] Candidate bootstrap_replicate(const BootstrapSetup& setup, std::mt19937_64& rng,
                                            Resampling resampling = Resampling::with_replacement);

/// The outcome vector a replicate is refit on (before the variogram step).
[[nodiscard]] std::vector<double> replicate_sample(const BootstrapSetup& setup, std::mt19937_64& rng,
                                                   Resampling resampling = Resampling::with_replacement);

struct UncertaintyRow {
    std::string parameter;
    double estimate = 0.0;
    double std_error = 0.0;
    friend bool operator==(const UncertaintyRow&, const UncertaintyRow&) = default;
};

struct UncertaintyTable {
    std::array<UncertaintyRow, 3> rows;
    std::size_t n_accepted = 0;
    std::size_t n_discarded = 0;
    std::size_t n_discarded_variance = 0;
    std::size_t n_discarded_nonconvergence = 0;
    std::size_t n_attempted = 0;
    std::uint64_t seed_used = 0;
    double threshold_factor = 0.0;
    double jitter = 0.0;
    friend bool operator==(const UncertaintyTable&, const UncertaintyTable&) = default;
};

struct BootstrapProgress {
    std::size_t accepted = 0;
    std::size_t discarded = 0;
};

using ProgressCallback = std::function<void(const BootstrapProgress&)>;

/// Thrown when the attempt cap is reached before B replicates were accepted.
class BootstrapExhausted : public ResourceError {
public:
    BootstrapExhausted(const std::string& what, UncertaintyTable partial)
        : ResourceError(what), partial_(std::move(partial)) {}
    /// Counters at the point of giving up (std_error fields are not meaningful).
    [[nodiscard]] const UncertaintyTable& partial() const noexcept { return partial_; }

private:
    UncertaintyTable partial_;
};

/**
 * Filtered bootstrap standard errors for (nugget, partial sill, shape).
 *
 * Replicates are generated in parallel but consumed in index order, and each
 * draws from replicate_stream(seed, index), so the result is bit-identical for
 * any worker count. The estimate column is the original-scale model.
 */
[[nodiscard]] UncertaintyTable par_uncertainty(const BootstrapSetup& setup, const ExpModelFit& model,
                                               const BootstrapConfig& cfg, const ProgressCallback& progress = {});
[[nodiscard]] UncertaintyTable par_uncertainty(const SpatialDataset& ds, const ExpModelFit& model,
                                               const BootstrapConfig& cfg, const ProgressCallback& progress = {});

/// Rows "nugget effect", "partial sill", "shape" with columns Estimate and Std. Error.
[[nodiscard]] std::string format_uncertainty_table(const UncertaintyTable& table);

}  // namespace egovario
