#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "egovario/dataset.hpp"

namespace egovario {

/// Unordered pair distances, one per pair i < j in row-major pair order.
struct DistanceSet {
    std::vector<double> values;
    std::size_t n_points = 0;
};

/// Which multiset the summary statistics describe.
enum class PairConvention {
    unordered,          ///< n(n-1)/2 pairs i < j
    ordered_with_self,  ///< full n x n distance matrix, self-pairs included
};

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

struct DistanceSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::vector<HistogramBin> histogram;
    std::map<double, std::size_t> n_below;  ///< threshold -> count of distances strictly below
    std::size_t n_pairs = 0;
    PairConvention convention = PairConvention::unordered;
};

inline constexpr std::size_t kDefaultHistogramBins = 30;
/// Above this many points the pair set is streamed instead of stored.
inline constexpr std::size_t kStreamingThreshold = 20'000;

[[nodiscard]] DistanceSet pairwise_distances(std::span<const Point> pts);
/// Uses every record's coordinates, whether or not its outcome is missing.
[[nodiscard]] DistanceSet pairwise_distances(const SpatialDataset& ds);

/// Quantile by linear interpolation between order statistics of sorted data.
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double p);

[[nodiscard]] DistanceSummary distance_summary(const DistanceSet& dset, std::span<const double> thresholds = {},
                                               std::size_t histogram_bins = kDefaultHistogramBins);

/// Same statistics over the n x n matrix convention (each pair twice plus n zeros).
[[nodiscard]] DistanceSummary ordered_pair_summary(const DistanceSet& dset, std::span<const double> thresholds = {},
                                                   std::size_t histogram_bins = kDefaultHistogramBins);

/// Exact unordered-pair summary without storing all pairs (two passes over the pairs).
[[nodiscard]] DistanceSummary streamed_distance_summary(std::span<const Point> pts,
                                                        std::span<const double> thresholds = {},
                                                        std::size_t histogram_bins = kDefaultHistogramBins);

/// distance.info entry point: materializes pairs for small inputs, streams above kStreamingThreshold.
[[nodiscard]] DistanceSummary summarize_distances(const SpatialDataset& ds, std::span<const double> thresholds = {},
                                                  std::size_t histogram_bins = kDefaultHistogramBins);

}  // namespace egovario
