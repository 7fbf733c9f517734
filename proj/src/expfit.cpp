#include "egovario/expfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "egovario/error.hpp"

namespace egovario {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Relative floor for nugget and partial sill; values at the floor are reported as zero.
constexpr double kFloor = 1e-12;
// A shape this many times max_dist means the fit is running off towards a linear variogram.
constexpr double kShapeDivergence = 1e4;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Problem {
    Eigen::VectorXd h;
    Eigen::VectorXd g;
    Eigen::VectorXd sqrt_w;
    double floor = 0.0;

    [[nodiscard]] ExpParams params(const Vec3& u) const { return {std::exp(u[0]), std::exp(u[1]), std::exp(u[2])}; }

    [[nodiscard]] Eigen::VectorXd residuals(const Vec3& u) const {
        const ExpParams p = params(u);
        Eigen::VectorXd r(h.size());
        for (Eigen::Index j = 0; j < h.size(); ++j)
            r[j] = sqrt_w[j] * (p.nugget + p.partial_sill * (1.0 - std::exp(-h[j] / p.shape)) - g[j]);
        return r;
    }

    [[nodiscard]] Eigen::MatrixXd jacobian(const Vec3& u) const {
        const ExpParams p = params(u);
        Eigen::MatrixXd jac(h.size(), 3);
        for (Eigen::Index j = 0; j < h.size(); ++j) {
            const double e = std::exp(-h[j] / p.shape);
            jac(j, 0) = sqrt_w[j] * p.nugget;
            jac(j, 1) = sqrt_w[j] * p.partial_sill * (1.0 - e);
            jac(j, 2) = -sqrt_w[j] * p.partial_sill * e * h[j] / p.shape;
        }
        return jac;
    }

    [[nodiscard]] Vec3 clamp(Vec3 u) const {
        const double lf = std::log(floor);
        u[0] = std::max(u[0], lf);
        u[1] = std::max(u[1], lf);
        return u;
    }
};

double data_scale(const EmpiricalVariogram& ev) {
    double scale = ev.sample_variance;
    for (const auto& b : ev.bins) scale = std::max(scale, b.gamma_hat);
    return scale > 0.0 && std::isfinite(scale) ? scale : 1.0;
}

ExpParams snap_floor(ExpParams p, double floor) {
    if (p.nugget <= floor * (1.0 + 1e-9)) p.nugget = 0.0;
    if (p.partial_sill <= floor * (1.0 + 1e-9)) p.partial_sill = 0.0;
    return p;
}

}  // namespace

void validate(const ExpParams& p) {
    if (!std::isfinite(p.nugget) || !std::isfinite(p.partial_sill) || !std::isfinite(p.shape) || p.nugget < 0.0 ||
        p.partial_sill < 0.0 || p.shape <= 0.0)
        throw ValidationError(fmt::format("invalid exponential parameters (nugget {}, partial sill {}, shape {})",
                                          p.nugget, p.partial_sill, p.shape));
}

double eval_exponential(const ExpParams& p, double h) {
    if (!(h >= 0.0)) throw ValidationError("lag distance must be non-negative");
    if (h == 0.0) return 0.0;
    return p.nugget + p.partial_sill * (1.0 - std::exp(-h / p.shape));
}

double model_covariance(const ExpParams& p, double h) {
    if (!(h >= 0.0)) throw ValidationError("lag distance must be non-negative");
    if (h == 0.0) return p.total_variance();
    return p.partial_sill * std::exp(-h / p.shape);
}

double practical_range(const ExpParams& p) {
    if (p.total_variance() <= 0.0) throw NumericalError("practical range undefined: total variance is zero");
    if (p.partial_sill <= 0.0) throw NumericalError("practical range undefined: partial sill is zero");
    return p.shape * std::log(p.partial_sill / (0.05 * p.total_variance()));
}

double rsv(const ExpParams& p) {
    if (p.total_variance() <= 0.0) throw NumericalError("RSV undefined: total variance is zero");
    return p.partial_sill / p.total_variance();
}

double relative_bias(const ExpParams& p, double sample_variance) {
    if (!(sample_variance > 0.0)) throw ValidationError("relative bias needs a positive sample variance");
    return p.total_variance() / sample_variance;
}

double wls_objective(const EmpiricalVariogram& ev, const ExpParams& params) {
    double s = 0.0;
    for (const auto& b : ev.bins) {
        const double w = static_cast<double>(b.n_pairs) / (b.mean_dist * b.mean_dist);
        const double r = eval_exponential(params, b.mean_dist) - b.gamma_hat;
        s += w * r * r;
    }
    return s;
}

ExpParams default_initial_params(const EmpiricalVariogram& ev) {
    if (ev.bins.empty()) throw ValidationError("empirical variogram has no bins");
    const double floor = kFloor * ev.sample_variance;
    ExpParams p;
    p.nugget = std::max(ev.bins.front().gamma_hat, floor);
    p.partial_sill = std::max(ev.sample_variance - p.nugget, floor);
    p.shape = ev.max_dist / 3.0;
    return p;
}

ExpModelFit fit_exponential(const EmpiricalVariogram& ev, std::optional<ExpParams> init, const FitOptions& options) {
    if (ev.bins.size() < 3)
        throw ValidationError(fmt::format("exponential fit needs at least 3 non-empty bins, got {}", ev.bins.size()));

    const double scale = data_scale(ev);
    Problem prob;
    prob.floor = kFloor * scale;
    const auto m = static_cast<Eigen::Index>(ev.bins.size());
    prob.h.resize(m);
    prob.g.resize(m);
    prob.sqrt_w.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& b = ev.bins[static_cast<std::size_t>(j)];
        prob.h[j] = b.mean_dist;
        prob.g[j] = b.gamma_hat;
        prob.sqrt_w[j] = std::sqrt(static_cast<double>(b.n_pairs)) / b.mean_dist;
    }

    ExpParams start = init ? *init : default_initial_params(ev);
    if (!(start.shape > 0.0) || !std::isfinite(start.shape)) start.shape = ev.max_dist / 3.0;
    Vec3 u = prob.clamp(Vec3(std::log(std::max(start.nugget, prob.floor)),
                             std::log(std::max(start.partial_sill, prob.floor)), std::log(start.shape)));

    Eigen::VectorXd r = prob.residuals(u);
    double s = r.squaredNorm();
    const double s_abs = 1e-28 * std::max(1.0, prob.g.cwiseProduct(prob.sqrt_w).squaredNorm());

    double lambda = 1e-3;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (s <= s_abs) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd jac = prob.jacobian(u);
        const Mat3 a = jac.transpose() * jac;
        const Vec3 grad = jac.transpose() * r;

        // Stop when even the full Gauss-Newton step could not lower the objective meaningfully.
        const double ridge = 1e-12 * std::max(a.trace(), std::numeric_limits<double>::min());
        const Vec3 gn = (a + ridge * Mat3::Identity()).ldlt().solve(-grad);
        const double gn_pred = s - (r + jac * gn).squaredNorm();
        if (gn_pred <= options.rel_objective_tol * s) {
            converged = true;
            break;
        }

        Vec3 diag = a.diagonal();
        const double dmax = std::max(diag.maxCoeff(), std::numeric_limits<double>::min());
        diag = diag.cwiseMax(1e-12 * dmax);

        bool accepted = false;
        Vec3 u_new;
        Eigen::VectorXd r_new;
        double s_new = s;
        while (lambda < 1e20) {
            const Mat3 lhs = a + lambda * Mat3(diag.asDiagonal());
            u_new = prob.clamp(u + lhs.ldlt().solve(-grad));
            r_new = prob.residuals(u_new);
            s_new = r_new.squaredNorm();
            if (std::isfinite(s_new) && s_new <= s) {
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No descent direction left at machine precision.
            converged = true;
            break;
        }
        lambda = std::max(lambda * 0.1, 1e-15);
        ++iterations;
        const double step = (u_new - u).norm();
        u = u_new;
        r = r_new;
        const double s_old = s;
        s = s_new;

        if (!u.allFinite() || std::exp(u[2]) > kShapeDivergence * ev.max_dist) {
            diverged = true;
            break;
        }
        if (step <= options.param_tol * (u.norm() + options.param_tol) ||
            (s_old - s <= options.rel_objective_tol * s && gn_pred <= 10.0 * options.rel_objective_tol * s)) {
            converged = true;
            break;
        }
    }
    if (diverged) converged = false;

    ExpModelFit fit;
    fit.params = snap_floor(prob.params(u), prob.floor);
    fit.converged = converged && u.allFinite();
    fit.n_iterations = iterations;
    fit.wls_objective = wls_objective(ev, fit.params);
    fit.meta = {ev.max_dist, ev.nbins_requested, ev.nbins_used};
    fit.sample_variance = ev.sample_variance;
    const ExpParams& p = fit.params;
    if (p.partial_sill > 0.0 && p.total_variance() > 0.0) fit.practical_range = practical_range(p);
    fit.rsv = p.total_variance() > 0.0 ? rsv(p) : kNaN;
    fit.rel_bias = ev.sample_variance > 0.0 ? relative_bias(p, ev.sample_variance) : kNaN;
    return fit;
}

std::vector<SweepCell> sweep_cells(std::span<const double> max_dists, std::span<const std::size_t> nbins_list) {
    if (max_dists.empty() || nbins_list.empty()) throw ValidationError("max_dist and nbins lists must be non-empty");
    std::vector<SweepCell> cells;
    if (max_dists.size() == 1) {
        for (auto nb : nbins_list) cells.push_back({max_dists[0], nb});
    } else if (nbins_list.size() == 1) {
        for (double md : max_dists) cells.push_back({md, nbins_list[0]});
    } else if (max_dists.size() == nbins_list.size()) {
        for (std::size_t i = 0; i < max_dists.size(); ++i) cells.push_back({max_dists[i], nbins_list[i]});
    } else {
        for (double md : max_dists)
            for (auto nb : nbins_list) cells.push_back({md, nb});
    }
    return cells;
}

ModelTable vario_mod(const SpatialDataset& ds, std::span<const double> max_dists,
                     std::span<const std::size_t> nbins_list) {
    const auto cells = sweep_cells(max_dists, nbins_list);
    ModelTable table;
    table.dataset_label = ds.source_name();
    table.rows.resize(cells.size());

    const auto pts = ds.observed_coordinates();
    const auto z = ds.observed_outcomes();
    const std::size_t n_missing = ds.n_missing_outcome();

    const auto n_cells = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < n_cells; ++c) {
        ModelRow& row = table.rows[static_cast<std::size_t>(c)];
        row.index = static_cast<std::size_t>(c) + 1;
        row.cell = cells[static_cast<std::size_t>(c)];
        try {
            auto ev = empirical_variogram(pts, z, row.cell.max_dist, row.cell.nbins);
            ev.n_missing_dropped = n_missing;
            row.variogram = ev;
            row.fit = fit_exponential(*row.variogram);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    }
    return table;
}

namespace {

std::string num(double v) {
    if (!std::isfinite(v)) return "NA";
    return fmt::format("{:.7g}", v);
}

}  // namespace

std::string format_model_table(const ModelTable& table) {
    const std::array<std::string, 10> header{"index", "max.dist", "nbins",        "nbins.used", "nugget",
                                             "partial.sill", "shape",  "prac.range", "RSV",        "rel.bias"};
    std::vector<std::array<std::string, 10>> cells;
    for (const auto& row : table.rows) {
        std::array<std::string, 10> c;
        c[0] = std::to_string(row.index);
        c[1] = num(row.cell.max_dist);
        c[2] = std::to_string(row.cell.nbins);
        c[3] = row.variogram ? std::to_string(row.variogram->nbins_used) : "NA";
        if (row.fit) {
            const auto& f = *row.fit;
            c[4] = num(f.params.nugget);
            c[5] = num(f.params.partial_sill);
            c[6] = num(f.params.shape);
            c[7] = f.practical_range ? num(*f.practical_range) : "NA";
            c[8] = num(f.rsv);
            c[9] = num(f.rel_bias);
        } else {
            for (std::size_t k = 4; k < 10; ++k) c[k] = "NA";
        }
        cells.push_back(c);
    }
    std::array<std::size_t, 10> width{};
    for (std::size_t k = 0; k < 10; ++k) {
        width[k] = header[k].size();
        for (const auto& c : cells) width[k] = std::max(width[k], c[k].size());
    }
    std::string out;
    for (std::size_t k = 0; k < 10; ++k) out += fmt::format("{}{:>{}}", k ? " " : "", header[k], width[k]);
    out += '\n';
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t k = 0; k < 10; ++k) out += fmt::format("{}{:>{}}", k ? " " : "", cells[r][k], width[k]);
        const auto& row = table.rows[r];
        if (!row.error.empty()) out += "  # failed: " + row.error;
        else if (row.fit && !row.fit->converged) out += "  # not converged";
        out += '\n';
    }
    return out;
}

}  // namespace egovario
