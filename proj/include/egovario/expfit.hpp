#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egovario/dataset.hpp"
#include "egovario/variogram.hpp"

namespace egovario {

/// Exponential semi-variogram parameters (nugget c0, partial sill, shape phi in meters).
struct ExpParams {
    double nugget = 0.0;
    double partial_sill = 0.0;
    double shape = 1.0;

    [[nodiscard]] double total_variance() const noexcept { return nugget + partial_sill; }
    friend bool operator==(const ExpParams&, const ExpParams&) = default;
};

/// Throws ValidationError unless nugget >= 0, partial_sill >= 0, shape > 0, all finite.
void validate(const ExpParams& params);

/// gamma(h) = c0 + psill (1 - exp(-h/phi)) for h > 0, and 0 at h = 0.
[[nodiscard]] double eval_exponential(const ExpParams& params, double h);

/// C(h) = c0 + psill - gamma(h): total variance at h = 0, psill exp(-h/phi) beyond.
[[nodiscard]] double model_covariance(const ExpParams& params, double h);

/// Lag at which the covariance drops to 5% of the total variance: phi log(psill / (0.05 (c0 + psill))).
/// Throws NumericalError when the partial sill or the total variance is zero.
[[nodiscard]] double practical_range(const ExpParams& params);

/// Relative structured variability psill / (c0 + psill).
[[nodiscard]] double rsv(const ExpParams& params);

/// Model variance over sample variance; 1 means they agree.
[[nodiscard]] double relative_bias(const ExpParams& params, double sample_variance);

struct FitMeta {
    double max_dist = 0.0;
    std::size_t nbins_requested = 0;
    std::size_t nbins_used = 0;
};

struct ExpModelFit {
    ExpParams params;
    std::optional<double> practical_range;  ///< empty when undefined (zero partial sill)
    double rsv = 0.0;
    double rel_bias = 0.0;
    bool converged = false;
    int n_iterations = 0;
    double wls_objective = 0.0;
    FitMeta meta;
    double sample_variance = 0.0;
};

struct FitOptions {
    double rel_objective_tol = 1e-10;
    double param_tol = 1e-8;
    int max_iterations = 200;
};

/**
 * Weighted least squares fit of the exponential model to the binned estimates,
 * with weights n_pairs / mean_dist^2.
 *
 * Levenberg-Marquardt runs on the logs of (c0, psill, phi), which keeps all
 * three positive; c0 and psill are floored at 1e-12 of the data scale, so a
 * component that wants to vanish ends up at (numerically) zero. Hitting the
 * iteration cap or leaving finite territory is reported via `converged`, not
 * thrown. Fewer than three bins throws ValidationError.
 */
[[nodiscard]] ExpModelFit fit_exponential(const EmpiricalVariogram& ev, std::optional<ExpParams> init = std::nullopt,
                                          const FitOptions& options = {});

/// Objective sum_j w_j (gamma_hat_j - gamma(mean_dist_j))^2 at the given parameters.
[[nodiscard]] double wls_objective(const EmpiricalVariogram& ev, const ExpParams& params);

/// Starting values used when fit_exponential gets no init.
[[nodiscard]] ExpParams default_initial_params(const EmpiricalVariogram& ev);

/// One (max_dist, nbins) combination of a sweep.
struct SweepCell {
    double max_dist = 0.0;
    std::size_t nbins = 0;
};

/// A length-1 list is broadcast over the other; equal lengths are zipped; otherwise the cross product
/// (max_dist outer, nbins inner).
[[nodiscard]] std::vector<SweepCell> sweep_cells(std::span<const double> max_dists,
                                                 std::span<const std::size_t> nbins_list);

struct ModelRow {
    std::size_t index = 0;  ///< 1-based
    SweepCell cell;
    std::optional<EmpiricalVariogram> variogram;
    std::optional<ExpModelFit> fit;
    std::string error;  ///< non-empty when the cell failed

    [[nodiscard]] bool ok() const noexcept { return fit.has_value() && error.empty(); }
};

struct ModelTable {
    std::vector<ModelRow> rows;
    std::string dataset_label;
};

/// Fits one model per sweep cell. Cell failures are recorded in the row, never thrown.
[[nodiscard]] ModelTable vario_mod(const SpatialDataset& ds, std::span<const double> max_dists,
                                   std::span<const std::size_t> nbins_list);

/// Fixed-width text table with columns index, max.dist, nbins, nbins.used, nugget, partial.sill, shape,
/// prac.range, RSV, rel.bias.
[[nodiscard]] std::string format_model_table(const ModelTable& table);

}  // namespace egovario
