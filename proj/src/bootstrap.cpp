#include "egovario/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>
#include <omp.h>

namespace egovario {

namespace {

NormalScores make_scores(std::span<const double> z) {
    if (z.size() < 2) throw ValidationError("normal score transform needs at least 2 values");
    return normal_score_transform(z);
}

ExpModelFit fit_gaussian_scale(std::span<const Point> coords, std::span<const double> y, double max_dist,
                               std::size_t nbins) {
    const auto ev = empirical_variogram(coords, y, max_dist, nbins);
    return fit_exponential(ev);
}

}  // namespace

double standard_normal_quantile(double p) {
    static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
    return boost::math::quantile(std_normal, p);
}

NormalScoreTable::NormalScoreTable(std::vector<double> z, std::vector<double> y, std::vector<double> p)
    : z_(std::move(z)), y_(std::move(y)), p_(std::move(p)) {
    if (z_.size() != y_.size() || z_.size() != p_.size() || z_.empty())
        throw ValidationError("normal score table needs matching, non-empty knot lists");
}

double NormalScoreTable::back_transform(double y) const {
    if (y <= y_.front()) return z_.front();
    if (y >= y_.back()) return z_.back();
    const auto it = std::upper_bound(y_.begin(), y_.end(), y);
    const auto k = static_cast<std::size_t>(it - y_.begin());
    const double t = (y - y_[k - 1]) / (y_[k] - y_[k - 1]);
    return z_[k - 1] + t * (z_[k] - z_[k - 1]);
}

NormalScores normal_score_transform(std::span<const double> z) {
    const std::size_t n = z.size();
    if (n < 2) throw ValidationError("normal score transform needs at least 2 values");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });

    NormalScores out;
    out.y.resize(n);
    std::vector<double> kz, ky, kp;
    const auto nd = static_cast<double>(n);
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && z[order[end]] == z[order[start]]) ++end;
        // Ranks start+1 .. end share their average.
        const double rank = 0.5 * static_cast<double>(start + 1 + end);
        const double p = (rank - 0.5) / nd;
        const double y = standard_normal_quantile(p);
        for (std::size_t k = start; k < end; ++k) out.y[order[k]] = y;
        kz.push_back(z[order[start]]);
        ky.push_back(y);
        kp.push_back(p);
        start = end;
    }
    if (kz.size() < 2) throw NumericalError("outcome is constant; nothing to bootstrap");
    out.table = NormalScoreTable(std::move(kz), std::move(ky), std::move(kp));
    return out;
}

std::vector<double> normal_score_back_transform(std::span<const double> y_star, const NormalScoreTable& table) {
    std::vector<double> z(y_star.size());
    std::transform(y_star.begin(), y_star.end(), z.begin(), [&](double y) { return table.back_transform(y); });
    return z;
}

void validate(const BootstrapConfig& cfg) {
    if (cfg.B < 2) throw ValidationError("bootstrap needs B >= 2");
    if (!(cfg.threshold_factor > 0.0)) throw ValidationError("threshold factor must be positive");
    if (!(cfg.max_attempt_factor >= 1.0)) throw ValidationError("max attempt factor must be at least 1");
    if (cfg.workers < 0) throw ValidationError("worker count must be non-negative");
}

const char* to_string(FilterDecision d) noexcept {
    switch (d) {
        case FilterDecision::accept: return "accepted";
        case FilterDecision::discard_variance: return "variance";
        case FilterDecision::discard_nonconvergence: return "non-convergence";
    }
    return "unknown";
}

FilterDecision apply_filter(const Candidate& c, double sample_variance, double tau) {
    if (!c.converged || !c.failure.empty()) return FilterDecision::discard_nonconvergence;
    if (c.params.total_variance() > tau * sample_variance) return FilterDecision::discard_variance;
    return FilterDecision::accept;
}

BootstrapSetup::BootstrapSetup(std::vector<Point> coords, std::vector<double> z, double max_dist, std::size_t nbins)
    : coords_(std::move(coords)),
      z_(std::move(z)),
      sample_variance_(egovario::sample_variance(z_)),
      scores_(make_scores(z_)),
      gaussian_fit_(fit_gaussian_scale(coords_, scores_.y, max_dist, nbins)),
      binning_(coords_, max_dist, nbins) {
    if (coords_.size() != z_.size()) throw ValidationError("coordinate and outcome counts differ");
    const auto c = build_covariance_matrix(coords_, gaussian_fit_.params);
    auto d = decorrelate(c, scores_.y);
    factor_ = std::move(d.factor);
    x_ = std::move(d.x);
}

BootstrapSetup::BootstrapSetup(const SpatialDataset& ds, const ExpModelFit& model)
    : BootstrapSetup(ds.observed_coordinates(), ds.observed_outcomes(), model.meta.max_dist,
                     model.meta.nbins_requested) {
    const double rel = std::fabs(sample_variance_ - model.sample_variance) /
                       std::max(std::fabs(model.sample_variance), std::numeric_limits<double>::min());
    if (rel > 1e-9) throw ValidationError("model was not fit on this dataset (sample variances differ)");
}

std::mt19937_64 replicate_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

std::vector<double> replicate_sample(const BootstrapSetup& setup, std::mt19937_64& rng, Resampling resampling) {
    const auto& x = setup.decorrelated();
    const auto n = x.size();
    Eigen::VectorXd x_star(n);
    if (resampling == Resampling::identity) {
        x_star = x;
    } else {
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        for (Eigen::Index i = 0; i < n; ++i) x_star[i] = x[pick(rng)];
    }
    const Eigen::VectorXd y_star = recorrelate(setup.lower(), x_star);
    return normal_score_back_transform(std::span<const double>(y_star.data(), static_cast<std::size_t>(n)),
                                       setup.scores().table);
}

Candidate bootstrap_replicate(const BootstrapSetup& setup, std::mt19937_64& rng, Resampling resampling) {
    Candidate c;
    try {
        const auto z_star = replicate_sample(setup, rng, resampling);
        const auto ev = setup.binning().evaluate(z_star);
        const auto fit = fit_exponential(ev);
        c.params = fit.params;
        c.converged = fit.converged;
    } catch (const std::exception& e) {
        c.converged = false;
        c.failure = e.what();
    }
    return c;
}

UncertaintyTable par_uncertainty(const BootstrapSetup& setup, const ExpModelFit& model, const BootstrapConfig& cfg,
                                 const ProgressCallback& progress) {
    validate(cfg);
    const std::uint64_t seed = cfg.seed ? *cfg.seed : (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}();
    const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
    const auto cap = static_cast<std::size_t>(std::ceil(cfg.max_attempt_factor * static_cast<double>(cfg.B)));

    UncertaintyTable table;
    table.seed_used = seed;
    table.threshold_factor = cfg.threshold_factor;
    table.jitter = setup.jitter();
    table.rows[0] = {"nugget effect", model.params.nugget, 0.0};
    table.rows[1] = {"partial sill", model.params.partial_sill, 0.0};
    table.rows[2] = {"shape", model.params.shape, 0.0};

    std::vector<std::array<double, 3>> accepted;
    accepted.reserve(cfg.B);
    std::size_t next = 0;
    while (accepted.size() < cfg.B && next < cap) {
        const std::size_t need = cfg.B - accepted.size();
        const std::size_t batch =
            std::min(cap - next, std::max(need + need / 4 + 8, static_cast<std::size_t>(workers) * 2));
        std::vector<Candidate> candidates(batch);
        const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
        for (std::ptrdiff_t k = 0; k < nb; ++k) {
            auto rng = replicate_stream(seed, next + static_cast<std::size_t>(k));
            candidates[static_cast<std::size_t>(k)] = bootstrap_replicate(setup, rng);
        }
        for (const auto& c : candidates) {
            if (accepted.size() == cfg.B) break;
            ++table.n_attempted;
            switch (apply_filter(c, setup.sample_variance(), cfg.threshold_factor)) {
                case FilterDecision::accept:
                    accepted.push_back({c.params.nugget, c.params.partial_sill, c.params.shape});
                    break;
                case FilterDecision::discard_variance: ++table.n_discarded_variance; break;
                case FilterDecision::discard_nonconvergence: ++table.n_discarded_nonconvergence; break;
            }
        }
        next += batch;
        table.n_accepted = accepted.size();
        table.n_discarded = table.n_discarded_variance + table.n_discarded_nonconvergence;
        if (progress) progress({table.n_accepted, table.n_discarded});
    }

    if (accepted.size() < cfg.B) {
        const double rate = table.n_attempted ? static_cast<double>(accepted.size()) / table.n_attempted : 0.0;
        throw BootstrapExhausted(
            fmt::format("bootstrap gave up after {} attempts: {} of {} replicates accepted (acceptance rate {:.3f}; "
                        "{} discarded for variance, {} for non-convergence)",
                        table.n_attempted, accepted.size(), cfg.B, rate, table.n_discarded_variance,
                        table.n_discarded_nonconvergence),
            table);
    }

    const auto b = static_cast<double>(cfg.B);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (const auto& t : accepted) mean += t[j];
        mean /= b;
        double ss = 0.0;
        for (const auto& t : accepted) ss += (t[j] - mean) * (t[j] - mean);
        table.rows[j].std_error = std::sqrt(ss / (b - 1.0));
    }
    return table;
}

UncertaintyTable par_uncertainty(const SpatialDataset& ds, const ExpModelFit& model, const BootstrapConfig& cfg,
                                 const ProgressCallback& progress) {
    validate(cfg);
    const BootstrapSetup setup(ds, model);
    return par_uncertainty(setup, model, cfg, progress);
}

std::string format_uncertainty_table(const UncertaintyTable& table) {
    std::string out = fmt::format("{:<14} {:>12} {:>12}\n", "", "Estimate", "Std. Error");
    for (const auto& r : table.rows)
        out += fmt::format("{:<14} {:>12.7f} {:>12.7f}\n", r.parameter, r.estimate, r.std_error);
    return out;
}

}  // namespace egovario
