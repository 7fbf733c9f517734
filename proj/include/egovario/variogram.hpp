#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "egovario/dataset.hpp"
#include "egovario/kernels.hpp"

namespace egovario {

struct VariogramBin {
    double lower = 0.0;
    double upper = 0.0;
    double mean_dist = 0.0;  ///< average pair distance in the bin, used as the lag
    std::size_t n_pairs = 0;
    double gamma_hat = 0.0;
};

/// Binned Matheron semi-variance estimates over (0, max_dist]. Empty bins are dropped.
struct EmpiricalVariogram {
    std::vector<VariogramBin> bins;
    double max_dist = 0.0;
    std::size_t nbins_requested = 0;
    std::size_t nbins_used = 0;
    double sample_variance = 0.0;
    std::size_t n_obs = 0;
    std::size_t n_missing_dropped = 0;
};

/// Sample variance with the n-1 denominator.
[[nodiscard]] double sample_variance(std::span<const double> z);

/**
 * Matheron estimator: gamma_hat = sum (z_i - z_j)^2 / (2 n_pairs) for pairs in
 * each of nbins equal-width bins of (0, max_dist]. Colocated pairs are excluded
 * and the right bin edge is closed.
 */
[[nodiscard]] EmpiricalVariogram empirical_variogram(std::span<const Point> pts, std::span<const double> z,
                                                     double max_dist, std::size_t nbins,
                                                     kernels::Execution exec = kernels::Execution::parallel);

/// Drops records with a missing outcome and records how many were dropped.
[[nodiscard]] EmpiricalVariogram empirical_variogram(const SpatialDataset& ds, double max_dist, std::size_t nbins);

/**
 * Pair-to-bin assignment for a fixed set of locations, so the variogram of many
 * outcome vectors on the same coordinates (bootstrap replicates) skips the
 * distance computation. evaluate() is serial and bit-reproducible.
 */
class PairBinning {
public:
    PairBinning(std::span<const Point> pts, double max_dist, std::size_t nbins);

    [[nodiscard]] EmpiricalVariogram evaluate(std::span<const double> z) const;
    [[nodiscard]] std::size_t n_points() const noexcept { return n_points_; }
    [[nodiscard]] std::size_t n_pairs() const noexcept { return pairs_.size(); }

private:
    struct Pair {
        std::uint32_t i;
        std::uint32_t j;
        std::uint32_t bin;
    };
    std::vector<Pair> pairs_;
    std::vector<double> sum_dist_;
    std::vector<std::size_t> count_;
    double max_dist_;
    std::size_t nbins_;
    std::size_t n_points_;
};

/// CSV with columns lower,upper,mean_dist,n_pairs,gamma_hat.
void write_bins_csv(std::ostream& out, const EmpiricalVariogram& ev);

}  // namespace egovario
