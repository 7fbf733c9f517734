#include "egovario/variogram.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "egovario/error.hpp"

namespace egovario {

namespace {

void check_parameters(double max_dist, std::size_t nbins) {
    if (!(max_dist > 0.0) || !std::isfinite(max_dist))
        throw ValidationError(fmt::format("max_dist must be positive, got {:g}", max_dist));
    if (nbins < 1) throw ValidationError("nbins must be at least 1");
}

EmpiricalVariogram assemble(const kernels::BinSums& sums, double max_dist, std::size_t nbins, double variance,
                            std::size_t n_obs) {
    EmpiricalVariogram ev;
    ev.max_dist = max_dist;
    ev.nbins_requested = nbins;
    ev.sample_variance = variance;
    ev.n_obs = n_obs;
    const double width = max_dist / static_cast<double>(nbins);
    for (std::size_t k = 0; k < nbins; ++k) {
        if (sums.count[k] == 0) continue;
        const auto np = static_cast<double>(sums.count[k]);
        VariogramBin b;
        b.lower = width * static_cast<double>(k);
        b.upper = k + 1 == nbins ? max_dist : width * static_cast<double>(k + 1);
        b.n_pairs = sums.count[k];
        b.mean_dist = sums.sum_dist[k] / np;
        b.gamma_hat = sums.sum_sq_diff[k] / (2.0 * np);
        ev.bins.push_back(b);
    }
    ev.nbins_used = ev.bins.size();
    if (ev.bins.empty())
        throw NumericalError(fmt::format("no pair of observations with 0 < distance <= {:g}", max_dist));
    return ev;
}

}  // namespace

double sample_variance(std::span<const double> z) {
    if (z.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= static_cast<double>(z.size());
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(z.size() - 1);
}

EmpiricalVariogram empirical_variogram(std::span<const Point> pts, std::span<const double> z, double max_dist,
                                       std::size_t nbins, kernels::Execution exec) {
    check_parameters(max_dist, nbins);
    if (pts.size() != z.size()) throw ValidationError("coordinate and outcome counts differ");
    if (z.size() < 2) throw ValidationError("need at least 2 observed outcomes");
    const auto sums = exec == kernels::Execution::parallel ? kernels::matheron_sums_parallel(pts, z, max_dist, nbins)
                                                           : kernels::matheron_sums_serial(pts, z, max_dist, nbins);
    return assemble(sums, max_dist, nbins, sample_variance(z), z.size());
}

EmpiricalVariogram empirical_variogram(const SpatialDataset& ds, double max_dist, std::size_t nbins) {
    const auto pts = ds.observed_coordinates();
    const auto z = ds.observed_outcomes();
    auto ev = empirical_variogram(pts, z, max_dist, nbins);
    ev.n_missing_dropped = ds.n_missing_outcome();
    return ev;
}

PairBinning::PairBinning(std::span<const Point> pts, double max_dist, std::size_t nbins)
    : sum_dist_(nbins, 0.0), count_(nbins, 0), max_dist_(max_dist), nbins_(nbins), n_points_(pts.size()) {
    check_parameters(max_dist, nbins);
    if (pts.size() > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("too many points");
    const double width = max_dist / static_cast<double>(nbins);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double dx = pts[i].x - pts[j].x;
            const double dy = pts[i].y - pts[j].y;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d <= 0.0 || d > max_dist) continue;
            const auto k = kernels::bin_index(d, width, nbins);
            pairs_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                              static_cast<std::uint32_t>(k)});
            sum_dist_[k] += d;
            ++count_[k];
        }
    }
}

EmpiricalVariogram PairBinning::evaluate(std::span<const double> z) const {
    if (z.size() != n_points_) throw ValidationError("outcome vector does not match the binned coordinates");
    kernels::BinSums sums(nbins_);
    sums.sum_dist = sum_dist_;
    sums.count = count_;
    for (const auto& p : pairs_) {
        const double diff = z[p.i] - z[p.j];
        sums.sum_sq_diff[p.bin] += diff * diff;
    }
    return assemble(sums, max_dist_, nbins_, sample_variance(z), z.size());
}

void write_bins_csv(std::ostream& out, const EmpiricalVariogram& ev) {
    const auto old = out.precision(17);
    out << "lower,upper,mean_dist,n_pairs,gamma_hat\n";
    for (const auto& b : ev.bins)
        out << b.lower << ',' << b.upper << ',' << b.mean_dist << ',' << b.n_pairs << ',' << b.gamma_hat << '\n';
    out.precision(old);
}

}  // namespace egovario
