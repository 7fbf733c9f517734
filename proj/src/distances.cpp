#include "egovario/distances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "egovario/error.hpp"
#include "egovario/kernels.hpp"

namespace egovario {

namespace {

std::vector<HistogramBin> make_bins(double upper, std::size_t nbins) {
    if (nbins == 0) throw ValidationError("histogram needs at least one bin");
    if (upper <= 0.0) upper = 1.0;
    std::vector<HistogramBin> bins(nbins);
    const double width = upper / static_cast<double>(nbins);
    for (std::size_t k = 0; k < nbins; ++k) {
        bins[k].lower = width * static_cast<double>(k);
        bins[k].upper = k + 1 == nbins ? upper : width * static_cast<double>(k + 1);
    }
    return bins;
}

// Linear-interpolation quantile given an accessor for the k-th order statistic.
template <class OrderStat>
double interpolated_quantile(std::size_t n, double p, OrderStat&& at) {
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    const double a = at(lo);
    if (frac == 0.0 || lo + 1 >= n) return a;
    return a + frac * (at(lo + 1) - a);
}

}  // namespace

DistanceSet pairwise_distances(std::span<const Point> pts) {
    if (pts.size() < 2) throw ValidationError("pairwise distances need at least 2 points");
    DistanceSet set;
    set.n_points = pts.size();
    set.values.resize(kernels::pair_count(pts.size()));
    kernels::pairwise_distances_parallel(pts, set.values);
    return set;
}

DistanceSet pairwise_distances(const SpatialDataset& ds) {
    const auto pts = ds.coordinates();
    return pairwise_distances(std::span<const Point>(pts));
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ValidationError("quantile of an empty set");
    p = std::clamp(p, 0.0, 1.0);
    return interpolated_quantile(sorted.size(), p, [&](std::size_t k) { return sorted[k]; });
}

DistanceSummary distance_summary(const DistanceSet& dset, std::span<const double> thresholds,
                                 std::size_t histogram_bins) {
    if (dset.values.empty()) throw ValidationError("distance summary of an empty distance set");
    std::vector<double> sorted = dset.values;
    std::sort(sorted.begin(), sorted.end());

    DistanceSummary s;
    s.convention = PairConvention::unordered;
    s.n_pairs = sorted.size();
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.5);
    s.q3 = quantile_sorted(sorted, 0.75);
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    s.mean = std::clamp(s.mean, s.min, s.max);

    s.histogram = make_bins(s.max, histogram_bins);
    const double width = s.histogram.front().upper - s.histogram.front().lower;
    for (double d : sorted) ++s.histogram[kernels::histogram_index(d, width, histogram_bins)].count;

    for (double t : thresholds)
        s.n_below[t] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    return s;
}

DistanceSummary ordered_pair_summary(const DistanceSet& dset, std::span<const double> thresholds,
                                     std::size_t histogram_bins) {
    DistanceSummary s = distance_summary(dset, thresholds, histogram_bins);
    std::vector<double> sorted = dset.values;
    std::sort(sorted.begin(), sorted.end());

    const std::size_t n = dset.n_points;
    const std::size_t total = n * n;
    // Order statistic k of {0 (n times)} U {each unordered distance twice}.
    auto at = [&](std::size_t k) { return k < n ? 0.0 : sorted[(k - n) / 2]; };

    s.convention = PairConvention::ordered_with_self;
    s.n_pairs = total;
    s.min = 0.0;
    s.q1 = interpolated_quantile(total, 0.25, at);
    s.median = interpolated_quantile(total, 0.5, at);
    s.q3 = interpolated_quantile(total, 0.75, at);
    s.mean = 2.0 * std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(total);
    for (auto& b : s.histogram) b.count *= 2;
    s.histogram.front().count += n;
    for (auto& [t, count] : s.n_below) count = 2 * count + (t > 0.0 ? n : 0);
    return s;
}

DistanceSummary streamed_distance_summary(std::span<const Point> pts, std::span<const double> thresholds,
                                          std::size_t histogram_bins) {
    if (pts.size() < 2) throw ValidationError("pairwise distances need at least 2 points");

    // Upper bound on any pair distance: the bounding-box diagonal.
    auto [xmin, xmax] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.x < b.x; });
    auto [ymin, ymax] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.y < b.y; });
    double diag = std::hypot(xmax->x - xmin->x, ymax->y - ymin->y);
    if (diag <= 0.0) diag = 1.0;
    diag = std::nextafter(diag * (1.0 + 1e-12), INFINITY);

    constexpr std::size_t kFine = std::size_t{1} << 16;
    const auto fine = kernels::pair_histogram_parallel(pts, diag, kFine);
    const std::size_t total = fine.n_pairs;

    std::vector<std::size_t> cum(kFine + 1, 0);
    for (std::size_t k = 0; k < kFine; ++k) cum[k + 1] = cum[k] + fine.counts[k];
    auto bin_of_rank = [&](std::size_t r) {
        return static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin()) - 1;
    };

    auto exact_quantile = [&](double p) {
        const double h = static_cast<double>(total - 1) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, total - 1);
        const std::size_t k_lo = bin_of_rank(lo);
        const std::size_t k_hi = bin_of_rank(hi);
        auto vals = kernels::pair_distances_in_bins(pts, diag, kFine, k_lo, k_hi);
        std::sort(vals.begin(), vals.end());
        const std::size_t base = cum[k_lo];
        return interpolated_quantile(total, p, [&](std::size_t k) { return vals[k - base]; });
    };

    DistanceSummary s;
    s.convention = PairConvention::unordered;
    s.n_pairs = total;
    s.min = fine.min;
    s.max = fine.max;
    s.q1 = exact_quantile(0.25);
    s.median = exact_quantile(0.5);
    s.q3 = exact_quantile(0.75);
    s.mean = std::clamp(fine.sum / static_cast<double>(total), s.min, s.max);

    s.histogram = make_bins(s.max, histogram_bins);
    const auto coarse = kernels::pair_histogram_parallel(pts, s.histogram.back().upper, histogram_bins);
    for (std::size_t k = 0; k < histogram_bins; ++k) s.histogram[k].count = coarse.counts[k];

    const auto below = kernels::count_pairs_below(pts, thresholds);
    for (std::size_t t = 0; t < thresholds.size(); ++t) s.n_below[thresholds[t]] = below[t];
    return s;
}

DistanceSummary summarize_distances(const SpatialDataset& ds, std::span<const double> thresholds,
                                    std::size_t histogram_bins) {
    const auto pts = ds.coordinates();
    if (pts.size() > kStreamingThreshold) return streamed_distance_summary(pts, thresholds, histogram_bins);
    return distance_summary(pairwise_distances(pts), thresholds, histogram_bins);
}

}  // namespace egovario
