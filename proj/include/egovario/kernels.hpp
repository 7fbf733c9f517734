#pragma once

// Data-parallel inner loops. Every kernel has a serial reference version and
// an OpenMP version; tests hold them against each other and bench/ times them.
//
// The OpenMP versions split work into a fixed number of row chunks that does
// not depend on the thread count, and reduce chunk partials in chunk order, so
// their output is bit-identical for any OMP_NUM_THREADS.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "egovario/dataset.hpp"

namespace egovario {
struct ExpParams;
}

namespace egovario::kernels {

enum class Execution { serial, parallel };

/// Number of unordered pairs i < j.
[[nodiscard]] constexpr std::size_t pair_count(std::size_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

/// Offset of the first pair (i, i+1) in row-major unordered pair order.
[[nodiscard]] constexpr std::size_t row_offset(std::size_t i, std::size_t n) noexcept {
    return i * n - i * (i + 1) / 2;
}

/// Writes |p_i - p_j| for i < j into out (size pair_count(n)) in row-major pair order.
void pairwise_distances_serial(std::span<const Point> pts, std::span<double> out);
void pairwise_distances_parallel(std::span<const Point> pts, std::span<double> out);

/// Per-bin sums for the Matheron estimator over bins of (0, max_dist].
struct BinSums {
    std::vector<double> sum_sq_diff;  ///< sum of (z_i - z_j)^2
    std::vector<double> sum_dist;
    std::vector<std::size_t> count;

    explicit BinSums(std::size_t nbins = 0) : sum_sq_diff(nbins, 0.0), sum_dist(nbins, 0.0), count(nbins, 0) {}
    void merge(const BinSums& other);
};

/// Bin index for distance d (0 < d <= max_dist), intervals closed on the right.
[[nodiscard]] std::size_t bin_index(double d, double width, std::size_t nbins) noexcept;

BinSums matheron_sums_serial(std::span<const Point> pts, std::span<const double> z, double max_dist,
                             std::size_t nbins);
BinSums matheron_sums_parallel(std::span<const Point> pts, std::span<const double> z, double max_dist,
                               std::size_t nbins);

/// Dense exponential-model covariance matrix: c_ij = model_covariance(d_ij), so colocated points get the total variance.
Eigen::MatrixXd covariance_matrix_serial(std::span<const Point> pts, const ExpParams& params);
Eigen::MatrixXd covariance_matrix_parallel(std::span<const Point> pts, const ExpParams& params);

/// Counts of pair distances per equal-width histogram bin over [0, upper], plus running
/// min/max/sum, without materializing the pair set.
struct PairHistogram {
    std::vector<std::size_t> counts;
    double min = 0.0;
    double max = 0.0;
    double sum = 0.0;
    std::size_t n_pairs = 0;
};

PairHistogram pair_histogram_serial(std::span<const Point> pts, double upper, std::size_t nbins);
PairHistogram pair_histogram_parallel(std::span<const Point> pts, double upper, std::size_t nbins);

/// Histogram bin of d under pair_histogram's binning (last bin closed).
[[nodiscard]] std::size_t histogram_index(double d, double width, std::size_t nbins) noexcept;

/// Pair distances whose histogram bin lies in [k_lo, k_hi] (streaming quantile refinement pass).
std::vector<double> pair_distances_in_bins(std::span<const Point> pts, double upper, std::size_t nbins,
                                           std::size_t k_lo, std::size_t k_hi);

/// counts[t] = number of pair distances strictly below thresholds[t].
std::vector<std::size_t> count_pairs_below(std::span<const Point> pts, std::span<const double> thresholds);

/// Fixed chunk count used to partition pair rows.
inline constexpr std::size_t kRowChunks = 64;

}  // namespace egovario::kernels
