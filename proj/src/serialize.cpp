#include "egovario/serialize.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "egovario/plot.hpp"

namespace egovario {

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_number(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string fmt_threshold(double t) { return fmt::format("{:g}", t); }

const char* convention_name(PairConvention c) {
    return c == PairConvention::unordered ? "unordered" : "ordered_with_self";
}

}  // namespace

void to_json(json& j, const Point& p) { j = json::array({p.x, p.y}); }
void from_json(const json& j, Point& p) {
    p.x = j.at(0).get<double>();
    p.y = j.at(1).get<double>();
}

void to_json(json& j, const MissingnessReport& r) {
    j = json{{"n_total", r.n_total},
             {"n_missing_outcome", r.n_missing_outcome},
             {"observed", r.observed_points},
             {"missing", r.missing_points}};
}

void to_json(json& j, const DistanceSummary& s) {
    json hist = json::array();
    for (const auto& b : s.histogram) hist.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
    json below = json::object();
    for (const auto& [t, c] : s.n_below) below[fmt_threshold(t)] = c;
    j = json{{"summary",
              {{"min", number(s.min)},
               {"q1", number(s.q1)},
               {"median", number(s.median)},
               {"mean", number(s.mean)},
               {"q3", number(s.q3)},
               {"max", number(s.max)}}},
             {"histogram", hist},
             {"n_below", below},
             {"n_pairs", s.n_pairs},
             {"convention", convention_name(s.convention)}};
}

void to_json(json& j, const VariogramBin& b) {
    j = json{{"lower", b.lower},
             {"upper", b.upper},
             {"mean_dist", b.mean_dist},
             {"n_pairs", b.n_pairs},
             {"gamma_hat", b.gamma_hat}};
}

void from_json(const json& j, VariogramBin& b) {
    b.lower = j.at("lower").get<double>();
    b.upper = j.at("upper").get<double>();
    b.mean_dist = j.at("mean_dist").get<double>();
    b.n_pairs = j.at("n_pairs").get<std::size_t>();
    b.gamma_hat = j.at("gamma_hat").get<double>();
}

void to_json(json& j, const EmpiricalVariogram& ev) {
    j = json{{"bins", ev.bins},
             {"max_dist", ev.max_dist},
             {"nbins_requested", ev.nbins_requested},
             {"nbins_used", ev.nbins_used},
             {"sample_variance", ev.sample_variance},
             {"n_obs", ev.n_obs},
             {"n_missing_dropped", ev.n_missing_dropped}};
}

void from_json(const json& j, EmpiricalVariogram& ev) {
    ev.bins = j.at("bins").get<std::vector<VariogramBin>>();
    ev.max_dist = j.at("max_dist").get<double>();
    ev.nbins_requested = j.at("nbins_requested").get<std::size_t>();
    ev.nbins_used = j.at("nbins_used").get<std::size_t>();
    ev.sample_variance = j.at("sample_variance").get<double>();
    ev.n_obs = j.at("n_obs").get<std::size_t>();
    ev.n_missing_dropped = j.value("n_missing_dropped", std::size_t{0});
}

void to_json(json& j, const ExpParams& p) {
    j = json{{"nugget", p.nugget}, {"partial_sill", p.partial_sill}, {"shape", p.shape}};
}

void from_json(const json& j, ExpParams& p) {
    p.nugget = j.at("nugget").get<double>();
    p.partial_sill = j.at("partial_sill").get<double>();
    p.shape = j.at("shape").get<double>();
}

void to_json(json& j, const ExpModelFit& f) {
    j = json{{"params", f.params},
             {"practical_range", f.practical_range ? number(*f.practical_range) : json(nullptr)},
             {"rsv", number(f.rsv)},
             {"rel_bias", number(f.rel_bias)},
             {"converged", f.converged},
             {"n_iterations", f.n_iterations},
             {"wls_objective", number(f.wls_objective)},
             {"meta",
              {{"max_dist", f.meta.max_dist},
               {"nbins_requested", f.meta.nbins_requested},
               {"nbins_used", f.meta.nbins_used}}},
             {"sample_variance", number(f.sample_variance)}};
}

void from_json(const json& j, ExpModelFit& f) {
    f.params = j.at("params").get<ExpParams>();
    if (j.at("practical_range").is_null()) f.practical_range.reset();
    else f.practical_range = j.at("practical_range").get<double>();
    f.rsv = read_number(j.at("rsv"));
    f.rel_bias = read_number(j.at("rel_bias"));
    f.converged = j.at("converged").get<bool>();
    f.n_iterations = j.at("n_iterations").get<int>();
    f.wls_objective = read_number(j.at("wls_objective"));
    const auto& m = j.at("meta");
    f.meta = {m.at("max_dist").get<double>(), m.at("nbins_requested").get<std::size_t>(),
              m.at("nbins_used").get<std::size_t>()};
    f.sample_variance = read_number(j.at("sample_variance"));
}

void to_json(json& j, const ModelRow& r) {
    const bool ok = r.ok();
    j = json{{"index", r.index},
             {"max_dist", r.cell.max_dist},
             {"nbins", r.cell.nbins},
             {"nbins_used", r.variogram ? json(r.variogram->nbins_used) : json(nullptr)},
             {"nugget", ok ? number(r.fit->params.nugget) : json(nullptr)},
             {"partial_sill", ok ? number(r.fit->params.partial_sill) : json(nullptr)},
             {"shape", ok ? number(r.fit->params.shape) : json(nullptr)},
             {"prac_range", ok && r.fit->practical_range ? number(*r.fit->practical_range) : json(nullptr)},
             {"rsv", ok ? number(r.fit->rsv) : json(nullptr)},
             {"rel_bias", ok ? number(r.fit->rel_bias) : json(nullptr)},
             {"converged", ok && r.fit->converged},
             {"error", r.error.empty() ? json(nullptr) : json(r.error)},
             {"variogram", r.variogram ? json(*r.variogram) : json(nullptr)},
             {"fit", r.fit ? json(*r.fit) : json(nullptr)}};
}

void from_json(const json& j, ModelRow& r) {
    r.index = j.at("index").get<std::size_t>();
    r.cell = {j.at("max_dist").get<double>(), j.at("nbins").get<std::size_t>()};
    if (!j.at("variogram").is_null()) r.variogram = j.at("variogram").get<EmpiricalVariogram>();
    if (!j.at("fit").is_null()) r.fit = j.at("fit").get<ExpModelFit>();
    r.error = j.at("error").is_null() ? std::string{} : j.at("error").get<std::string>();
}

void to_json(json& j, const ModelTable& t) {
    j = json{{"dataset_label", t.dataset_label},
             {"columns",
              {"index", "max.dist", "nbins", "nbins.used", "nugget", "partial.sill", "shape", "prac.range", "RSV",
               "rel.bias"}},
             {"rows", t.rows}};
}

void from_json(const json& j, ModelTable& t) {
    t.dataset_label = j.at("dataset_label").get<std::string>();
    t.rows = j.at("rows").get<std::vector<ModelRow>>();
}

void to_json(json& j, const OlsFit& f) {
    json coefs = json::array();
    for (const auto& c : f.coefficients)
        coefs.push_back({{"name", c.name},
                         {"estimate", number(c.estimate)},
                         {"std_error", number(c.std_error)},
                         {"t_value", number(c.t_value)},
                         {"p_value", number(c.p_value)}});
    j = json{{"response", f.response},
             {"coefficients", coefs},
             {"residual_sd", number(f.residual_sd)},
             {"df_residual", f.df_residual},
             {"r_squared", number(f.r_squared)},
             {"adj_r_squared", number(f.adj_r_squared)},
             {"f_statistic", number(f.f_statistic)},
             {"n_used", f.n_used()},
             {"n_dropped", f.n_source_rows - f.n_used()}};
}

void to_json(json& j, const UncertaintyTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"parameter", r.parameter}, {"estimate", number(r.estimate)}, {"std_error", number(r.std_error)}});
    j = json{{"rows", rows},
             {"n_accepted", t.n_accepted},
             {"n_discarded", t.n_discarded},
             {"n_attempted", t.n_attempted},
             {"discard_reasons",
              {{"variance", t.n_discarded_variance}, {"non_convergence", t.n_discarded_nonconvergence}}},
             {"seed_used", t.seed_used},
             {"threshold_factor", t.threshold_factor},
             {"jitter", t.jitter}};
}

void from_json(const json& j, UncertaintyTable& t) {
    const auto& rows = j.at("rows");
    for (std::size_t k = 0; k < 3; ++k) {
        t.rows[k].parameter = rows.at(k).at("parameter").get<std::string>();
        t.rows[k].estimate = read_number(rows.at(k).at("estimate"));
        t.rows[k].std_error = read_number(rows.at(k).at("std_error"));
    }
    t.n_accepted = j.at("n_accepted").get<std::size_t>();
    t.n_discarded = j.at("n_discarded").get<std::size_t>();
    t.n_attempted = j.at("n_attempted").get<std::size_t>();
    t.n_discarded_variance = j.at("discard_reasons").at("variance").get<std::size_t>();
    t.n_discarded_nonconvergence = j.at("discard_reasons").at("non_convergence").get<std::size_t>();
    t.seed_used = j.at("seed_used").get<std::uint64_t>();
    t.threshold_factor = j.at("threshold_factor").get<double>();
    t.jitter = j.at("jitter").get<double>();
}

json model_table_with_curves(const ModelTable& table, std::size_t samples) {
    json j = table;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        j["rows"][i]["curve"] = row.fit ? json(plot::fitted_curve(row.fit->params, row.cell.max_dist, samples))
                                        : json(nullptr);
    }
    return j;
}

json versioned(const std::string& kind, json payload) {
    return json{{"schema_version", kSchemaVersion}, {"kind", kind}, {"data", std::move(payload)}};
}

}  // namespace egovario
