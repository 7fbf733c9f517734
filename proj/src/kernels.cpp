#include "egovario/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "egovario/expfit.hpp"

namespace egovario::kernels {

namespace {

inline double dist(const Point& a, const Point& b) noexcept {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Row boundaries [b[c], b[c+1]) giving each chunk roughly the same number of pairs.
// Depends only on n, never on the thread count.
std::vector<std::size_t> chunk_bounds(std::size_t n) {
    const std::size_t chunks = std::max<std::size_t>(1, std::min(kRowChunks, n));
    const std::size_t total = pair_count(n);
    std::vector<std::size_t> b{0};
    std::size_t row = 0;
    for (std::size_t c = 1; c < chunks; ++c) {
        const std::size_t target = total * c / chunks;
        while (row < n && row_offset(row, n) < target) ++row;
        b.push_back(std::max(row, b.back()));
    }
    b.push_back(n);
    return b;
}

void accumulate_rows(std::span<const Point> pts, std::span<const double> z, double max_dist, std::size_t nbins,
                     std::size_t row_begin, std::size_t row_end, BinSums& acc) {
    const double width = max_dist / static_cast<double>(nbins);
    const std::size_t n = pts.size();
    for (std::size_t i = row_begin; i < row_end; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = dist(pts[i], pts[j]);
            if (d <= 0.0 || d > max_dist) continue;
            const std::size_t k = bin_index(d, width, nbins);
            const double diff = z[i] - z[j];
            acc.sum_sq_diff[k] += diff * diff;
            acc.sum_dist[k] += d;
            ++acc.count[k];
        }
    }
}

void histogram_rows(std::span<const Point> pts, double upper, std::size_t nbins, std::size_t row_begin,
                    std::size_t row_end, PairHistogram& h) {
    const double width = upper / static_cast<double>(nbins);
    const std::size_t n = pts.size();
    for (std::size_t i = row_begin; i < row_end; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = dist(pts[i], pts[j]);
            ++h.counts[histogram_index(d, width, nbins)];
            h.min = std::min(h.min, d);
            h.max = std::max(h.max, d);
            h.sum += d;
            ++h.n_pairs;
        }
    }
}

PairHistogram empty_histogram(std::size_t nbins) {
    PairHistogram h;
    h.counts.assign(nbins, 0);
    h.min = std::numeric_limits<double>::infinity();
    h.max = -std::numeric_limits<double>::infinity();
    return h;
}

void merge_histogram(PairHistogram& into, const PairHistogram& part) {
    for (std::size_t k = 0; k < into.counts.size(); ++k) into.counts[k] += part.counts[k];
    into.min = std::min(into.min, part.min);
    into.max = std::max(into.max, part.max);
    into.sum += part.sum;
    into.n_pairs += part.n_pairs;
}

}  // namespace

void BinSums::merge(const BinSums& other) {
    for (std::size_t k = 0; k < count.size(); ++k) {
        sum_sq_diff[k] += other.sum_sq_diff[k];
        sum_dist[k] += other.sum_dist[k];
        count[k] += other.count[k];
    }
}

std::size_t bin_index(double d, double width, std::size_t nbins) noexcept {
    const double q = std::ceil(d / width);
    if (q < 1.0) return 0;
    const auto k = static_cast<std::size_t>(q) - 1;
    return std::min(k, nbins - 1);
}

void pairwise_distances_serial(std::span<const Point> pts, std::span<double> out) {
    const std::size_t n = pts.size();
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out[k++] = dist(pts[i], pts[j]);
}

void pairwise_distances_parallel(std::span<const Point> pts, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        std::size_t k = row_offset(static_cast<std::size_t>(i), pts.size());
        for (std::ptrdiff_t j = i + 1; j < n; ++j) out[k++] = dist(pts[i], pts[j]);
    }
}

BinSums matheron_sums_serial(std::span<const Point> pts, std::span<const double> z, double max_dist,
                             std::size_t nbins) {
    BinSums acc(nbins);
    accumulate_rows(pts, z, max_dist, nbins, 0, pts.size(), acc);
    return acc;
}

BinSums matheron_sums_parallel(std::span<const Point> pts, std::span<const double> z, double max_dist,
                               std::size_t nbins) {
    const auto bounds = chunk_bounds(pts.size());
    const auto chunks = static_cast<std::ptrdiff_t>(bounds.size() - 1);
    std::vector<BinSums> partial(static_cast<std::size_t>(chunks), BinSums(nbins));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < chunks; ++c)
        accumulate_rows(pts, z, max_dist, nbins, bounds[c], bounds[c + 1], partial[c]);
    BinSums acc(nbins);
    for (const auto& p : partial) acc.merge(p);
    return acc;
}

namespace {

// Colocated distinct points get the full variance: gamma(0) = 0.
double covariance_entry(double d, double psill, double shape, double total) {
    return d == 0.0 ? total : psill * std::exp(-d / shape);
}

}  // namespace

Eigen::MatrixXd covariance_matrix_serial(std::span<const Point> pts, const ExpParams& params) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd c(n, n);
    const double total = params.nugget + params.partial_sill;
    for (Eigen::Index i = 0; i < n; ++i) {
        c(i, i) = total;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = covariance_entry(dist(pts[i], pts[j]), params.partial_sill, params.shape, total);
            c(i, j) = v;
            c(j, i) = v;
        }
    }
    return c;
}

Eigen::MatrixXd covariance_matrix_parallel(std::span<const Point> pts, const ExpParams& params) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd c(n, n);
    const double total = params.nugget + params.partial_sill;
    // Upper triangle column by column (contiguous writes), then mirror.
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i)
            c(i, j) = covariance_entry(dist(pts[i], pts[j]), params.partial_sill, params.shape, total);
        c(j, j) = total;
    }
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j + 1; i < n; ++i) c(i, j) = c(j, i);
    return c;
}

PairHistogram pair_histogram_serial(std::span<const Point> pts, double upper, std::size_t nbins) {
    PairHistogram h = empty_histogram(nbins);
    histogram_rows(pts, upper, nbins, 0, pts.size(), h);
    return h;
}

PairHistogram pair_histogram_parallel(std::span<const Point> pts, double upper, std::size_t nbins) {
    const auto bounds = chunk_bounds(pts.size());
    const auto chunks = static_cast<std::ptrdiff_t>(bounds.size() - 1);
    std::vector<PairHistogram> partial(static_cast<std::size_t>(chunks), empty_histogram(nbins));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < chunks; ++c)
        histogram_rows(pts, upper, nbins, bounds[c], bounds[c + 1], partial[c]);
    PairHistogram h = empty_histogram(nbins);
    for (const auto& p : partial) merge_histogram(h, p);
    return h;
}

std::size_t histogram_index(double d, double width, std::size_t nbins) noexcept {
    std::size_t k = width > 0.0 ? static_cast<std::size_t>(d / width) : 0;
    return std::min(k, nbins - 1);
}

std::vector<double> pair_distances_in_bins(std::span<const Point> pts, double upper, std::size_t nbins,
                                           std::size_t k_lo, std::size_t k_hi) {
    const auto bounds = chunk_bounds(pts.size());
    const auto chunks = static_cast<std::ptrdiff_t>(bounds.size() - 1);
    const double width = upper / static_cast<double>(nbins);
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(chunks));
    const std::size_t n = pts.size();
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < chunks; ++c) {
        for (std::size_t i = bounds[c]; i < bounds[c + 1]; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = dist(pts[i], pts[j]);
                const std::size_t k = histogram_index(d, width, nbins);
                if (k >= k_lo && k <= k_hi) partial[c].push_back(d);
            }
    }
    std::vector<double> out;
    for (auto& p : partial) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::vector<std::size_t> count_pairs_below(std::span<const Point> pts, std::span<const double> thresholds) {
    const auto bounds = chunk_bounds(pts.size());
    const auto chunks = static_cast<std::ptrdiff_t>(bounds.size() - 1);
    const std::size_t n = pts.size();
    std::vector<std::vector<std::size_t>> partial(static_cast<std::size_t>(chunks),
                                                  std::vector<std::size_t>(thresholds.size(), 0));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < chunks; ++c) {
        for (std::size_t i = bounds[c]; i < bounds[c + 1]; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = dist(pts[i], pts[j]);
                for (std::size_t t = 0; t < thresholds.size(); ++t)
                    if (d < thresholds[t]) ++partial[c][t];
            }
    }
    std::vector<std::size_t> out(thresholds.size(), 0);
    for (const auto& p : partial)
        for (std::size_t t = 0; t < out.size(); ++t) out[t] += p[t];
    return out;
}

}  // namespace egovario::kernels
