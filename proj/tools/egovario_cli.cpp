// egovario command-line front end.
//
//   egovario coords-plot     data.csv
//   egovario distance-info   data.csv --thresholds 2000
//   egovario vario-mod       data.csv --max-dist 2000,1500,1000,500 --nbins 13 [--pdf]
//   egovario reg-prep        data.csv --response w --predictors a,b,c
//   egovario par-uncertainty data.csv --max-dist 600 --nbins 12,13 --model-index 1
//   egovario simulate        --n 900 --extent 5000 --nugget 1 --psill 4 --shape 300 --out sim.csv
//   egovario serve           --port 8080

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "egovario/bootstrap.hpp"
#include "egovario/distances.hpp"
#include "egovario/error.hpp"
#include "egovario/expfit.hpp"
#include "egovario/plot.hpp"
#include "egovario/regress.hpp"
#include "egovario/serialize.hpp"
#include "egovario/service.hpp"
#include "egovario/simfield.hpp"

namespace fs = std::filesystem;
using namespace egovario;

namespace {

constexpr const char* kOutDirEnv = "EGOVARIO_OUT_DIR";

struct Common {
    std::string input;
    std::string out_dir;
    std::string delimiter = "auto";
    bool pdf = false;
};

Delimiter parse_delimiter(const std::string& s) {
    if (s == "auto") return Delimiter::auto_detect;
    if (s == "comma") return Delimiter::comma;
    if (s == "semicolon") return Delimiter::semicolon;
    if (s == "tab") return Delimiter::tab;
    throw ValidationError("delimiter must be auto, comma, semicolon or tab");
}

SpatialDataset load(const Common& c) {
    auto ds = load_dataset(c.input, parse_delimiter(c.delimiter), [](std::string_view msg) { std::cout << msg << "\n"; });
    return ds;
}

fs::path out_dir(const Common& c) {
    fs::path dir = c.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv(kOutDirEnv);
        dir = env && *env ? env : ".";
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const std::string& kind, json payload) {
    write_text(path, versioned(kind, std::move(payload)).dump(2) + "\n");
}

void add_input(CLI::App* sub, Common& c) {
    sub->add_option("input", c.input, "Delimited data file: x, y, outcome, further columns")->required();
    sub->add_option("--out-dir", c.out_dir, fmt::format("Output directory (default ${} or .)", kOutDirEnv));
    sub->add_option("--delimiter", c.delimiter, "auto, comma, semicolon or tab")->capture_default_str();
}

std::string summary_line(const DistanceSummary& s) {
    return fmt::format("{:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n{:>10.0f} {:>10.0f} {:>10.0f} {:>10.0f} {:>10.0f} {:>10.0f}\n",
                       "Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max.", s.min, s.q1, s.median, s.mean, s.q3,
                       s.max);
}

int cmd_coords_plot(const Common& c) {
    const auto ds = load(c);
    const auto rep = missingness_summary(ds);
    std::cout << fmt::format("{} locations, {} with missing outcome (red crosses)\n", rep.n_total,
                             rep.n_missing_outcome);
    const auto dir = out_dir(c);
    const auto fig = plot::coords_figure(rep, ds.source_name());
    write_text(dir / "coords.svg", plot::render_svg(fig));
    if (c.pdf) write_text(dir / "coords.pdf", plot::render_pdf(std::span(&fig, 1)));
    write_json(dir / "coords.json", "missingness", rep);
    return 0;
}

int cmd_distance_info(const Common& c, const std::vector<double>& thresholds, std::size_t bins,
                      const std::string& convention) {
    if (convention != "unordered" && convention != "ordered" && convention != "both")
        throw ValidationError("--convention must be unordered, ordered or both");
    const auto ds = load(c);
    const auto dir = out_dir(c);
    json doc;
    const auto report = [&](const DistanceSummary& s, const char* label) {
        std::cout << fmt::format("Pairwise distances [m], {} ({} pairs):\n", label, s.n_pairs) << summary_line(s);
        for (const auto& [t, n] : s.n_below) std::cout << fmt::format("  pairs closer than {:g} m: {}\n", t, n);
        doc[label] = s;
    };
    if (convention != "ordered") {
        const auto s = summarize_distances(ds, thresholds, bins);
        report(s, "unordered");
        write_text(dir / "distance_hist.svg", plot::render_svg(plot::histogram_figure(s)));
        if (c.pdf) {
            const auto fig = plot::histogram_figure(s);
            write_text(dir / "distance_hist.pdf", plot::render_pdf(std::span(&fig, 1)));
        }
    }
    if (convention != "unordered") {
        if (ds.size() > kStreamingThreshold)
            throw ResourceError(fmt::format("ordered convention needs all {} x {} distances in memory", ds.size(),
                                            ds.size()));
        report(ordered_pair_summary(pairwise_distances(ds), thresholds, bins), "ordered_with_self");
    }
    write_json(dir / "distance_info.json", "distance_info", doc);
    return 0;
}

ModelTable sweep(const SpatialDataset& ds, const std::vector<double>& max_dists, const std::vector<std::size_t>& nbins) {
    auto table = vario_mod(ds, max_dists, nbins);
    std::cout << format_model_table(table);
    return table;
}

int cmd_vario_mod(const Common& c, const std::vector<double>& max_dists, const std::vector<std::size_t>& nbins) {
    const auto ds = load(c);
    const auto table = sweep(ds, max_dists, nbins);
    const auto dir = out_dir(c);
    write_text(dir / "vario_mod.txt", format_model_table(table));
    write_json(dir / "vario_mod.json", "model_table", model_table_with_curves(table));
    std::vector<plot::Figure> figs;
    for (const auto& row : table.rows) {
        figs.push_back(plot::variogram_figure(row));
        write_text(dir / fmt::format("vario_model_{}.svg", row.index), plot::render_svg(figs.back()));
    }
    if (c.pdf) write_text(dir / "vario_mod.pdf", plot::render_pdf(figs));
    std::size_t failed = 0;
    for (const auto& row : table.rows) failed += row.ok() ? 0 : 1;
    if (failed) std::cerr << fmt::format("{} of {} models could not be fitted\n", failed, table.rows.size());
    return 0;
}

int cmd_reg_prep(const Common& c, const std::string& response, const std::vector<std::string>& predictors) {
    const auto ds = load(c);
    const auto fit = fit_ols(ds, response, predictors);
    const auto summary = format_regression_summary(fit);
    std::cout << summary;
    const auto residuals = vario_reg_prep(fit, ds);
    const auto dir = out_dir(c);
    {
        std::ofstream out(dir / "residuals.csv", std::ios::binary);
        write_dataset(out, residuals);
    }
    write_text(dir / "regression.txt", summary);
    write_json(dir / "regression.json", "regression", fit);
    std::cout << fmt::format("{} studentized residuals written to {}\n", residuals.size(),
                             (dir / "residuals.csv").string());
    return 0;
}

int cmd_par_uncertainty(const Common& c, const std::vector<double>& max_dists, const std::vector<std::size_t>& nbins,
                        std::size_t model_index, BootstrapConfig cfg) {
    const auto ds = load(c);
    const auto table = sweep(ds, max_dists, nbins);
    if (model_index < 1 || model_index > table.rows.size())
        throw ValidationError(fmt::format("--model-index must be in 1..{}", table.rows.size()));
    const auto& row = table.rows[model_index - 1];
    if (!row.ok()) throw NumericalError(fmt::format("model {} has no usable fit: {}", model_index, row.error));
    std::cout << fmt::format("\nBootstrap for model {} (B = {}, threshold factor = {:g})\n", model_index, cfg.B,
                             cfg.threshold_factor);
    const auto dir = out_dir(c);
    UncertaintyTable result;
    try {
        result = par_uncertainty(ds, *row.fit, cfg);
    } catch (const BootstrapExhausted& e) {
        // Keep what was accepted so far for inspection; the exit code still reports the failure.
        json payload = e.partial();
        payload["model"] = row;
        payload["partial"] = true;
        write_json(dir / fmt::format("uncertainty_model_{}.json", model_index), "uncertainty_table", payload);
        throw;
    }
    const auto text = format_uncertainty_table(result);
    std::cout << text;
    std::cout << fmt::format("accepted {}, discarded {} (variance {}, non-convergence {}), seed {}\n",
                             result.n_accepted, result.n_discarded, result.n_discarded_variance,
                             result.n_discarded_nonconvergence, result.seed_used);
    write_text(dir / fmt::format("uncertainty_model_{}.txt", model_index), text);
    json payload = result;
    payload["model"] = row;
    write_json(dir / fmt::format("uncertainty_model_{}.json", model_index), "uncertainty_table", payload);
    return 0;
}

struct SimArgs {
    std::size_t n = 900;
    double extent = 5000.0;
    double nugget = 1.0;
    double psill = 4.0;
    double shape = 300.0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_simulate(const SimArgs& a) {
    const ExpParams params{a.nugget, a.psill, a.shape};
    validate(params);
    const auto coords = uniform_points(a.n, a.extent, a.seed);
    const auto z = simulate_field({params, coords, a.seed + 1});
    const auto ds = make_dataset(coords, z, "simulated");
    if (a.out.empty() || a.out == "-") {
        write_dataset(std::cout, ds);
    } else {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + a.out);
        write_dataset(out, ds);
        std::cerr << fmt::format("{} points written to {}\n", a.n, a.out);
    }
    return 0;
}

int cmd_serve(service::ServiceConfig cfg, std::optional<int> port, double ttl_hours, const std::string& data_dir) {
    if (port) {
        cfg.port = *port;
    } else if (const char* env = std::getenv(service::kPortEnv); env && *env) {
        cfg.port = std::atoi(env);
    }
    cfg.ttl = std::chrono::seconds(static_cast<long long>(ttl_hours * 3600.0));
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    service::Service svc(cfg);
    const int bound = svc.bind();
    if (bound < 0) throw ResourceError(fmt::format("cannot listen on {}:{}", cfg.host, cfg.port));
    std::cout << fmt::format("listening on http://{}:{}\n", cfg.host, bound) << std::flush;
    svc.run();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatial semi-variogram analysis: empirical variograms, exponential fits, filtered bootstrap "
                 "standard errors.", "egovario"};
    app.require_subcommand(1);

    Common common;
    std::vector<double> max_dists;
    std::vector<std::size_t> nbins;
    std::vector<double> thresholds{2000.0};
    std::size_t hist_bins = kDefaultHistogramBins;
    std::string convention = "both";
    std::string response;
    std::vector<std::string> predictors;
    std::size_t model_index = 1;
    BootstrapConfig bcfg;
    std::optional<std::uint64_t> seed;
    SimArgs sim;
    service::ServiceConfig scfg;
    std::optional<int> port;
    double ttl_hours = 24.0;
    std::string data_dir;

    auto* coords = app.add_subcommand("coords-plot", "Plot locations, marking missing outcomes");
    add_input(coords, common);
    coords->add_flag("--pdf", common.pdf, "Also write a PDF");

    auto* dist = app.add_subcommand("distance-info", "Summary and histogram of pairwise distances");
    add_input(dist, common);
    dist->add_option("--thresholds", thresholds, "Report pair counts below these distances")->delimiter(',')
        ->capture_default_str();
    dist->add_option("--bins", hist_bins, "Histogram bins")->capture_default_str();
    dist->add_option("--convention", convention, "unordered (pairs i < j), ordered (n x n matrix) or both")
        ->capture_default_str();
    dist->add_flag("--pdf", common.pdf, "Also write a PDF of the histogram");

    auto* vmod = app.add_subcommand("vario-mod", "Fit exponential models over max-dist / nbins combinations");
    add_input(vmod, common);
    vmod->add_option("--max-dist", max_dists, "Maximal distances, comma separated")->delimiter(',')->required();
    vmod->add_option("--nbins", nbins, "Bin counts, comma separated")->delimiter(',')->required();
    vmod->add_flag("--pdf", common.pdf, "Also write all fitted semi-variograms to one PDF");

    auto* reg = app.add_subcommand("reg-prep", "OLS fit; studentized residuals attached to coordinates");
    add_input(reg, common);
    reg->add_option("--response", response, "Response column")->required();
    reg->add_option("--predictors", predictors, "Predictor columns, comma separated")->delimiter(',')->required();

    auto* unc = app.add_subcommand("par-uncertainty", "Filtered bootstrap standard errors for one fitted model");
    add_input(unc, common);
    unc->add_option("--max-dist", max_dists, "Maximal distances, comma separated")->delimiter(',')->required();
    unc->add_option("--nbins", nbins, "Bin counts, comma separated")->delimiter(',')->required();
    unc->add_option("--model-index", model_index, "Row of the model table to bootstrap (1-based)")
        ->capture_default_str();
    unc->add_option("--threshold-factor", bcfg.threshold_factor, "Discard replicates above this times the sample variance")
        ->capture_default_str();
    unc->add_option("--B", bcfg.B, "Accepted replicates")->capture_default_str();
    unc->add_option("--seed", seed, "RNG seed (random when omitted)");
    unc->add_option("--max-attempt-factor", bcfg.max_attempt_factor, "Give up after this many times B attempts")
        ->capture_default_str();
    unc->add_option("--workers", bcfg.workers, "Threads for replicates (0 = default)")->capture_default_str();

    auto* simc = app.add_subcommand("simulate", "Gaussian field with exponential covariance on uniform points");
    simc->add_option("--n", sim.n, "Number of points")->capture_default_str();
    simc->add_option("--extent", sim.extent, "Side of the square [m]")->capture_default_str();
    simc->add_option("--nugget", sim.nugget)->capture_default_str();
    simc->add_option("--psill", sim.psill, "Partial sill")->capture_default_str();
    simc->add_option("--shape", sim.shape, "Shape [m]")->capture_default_str();
    simc->add_option("--seed", sim.seed)->capture_default_str();
    simc->add_option("--out", sim.out, "Output file (default standard output)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--port", port, fmt::format("Port (default ${} or {})", service::kPortEnv, scfg.port));
    serve->add_option("--host", scfg.host)->capture_default_str();
    serve->add_option("--workers", scfg.workers, "Concurrent bootstrap jobs (0 = hardware concurrency)")
        ->capture_default_str();
    serve->add_option("--ttl-hours", ttl_hours, "Idle session lifetime")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Persist sessions in this directory");

    if (argc < 2) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*coords) return cmd_coords_plot(common);
        if (*dist) return cmd_distance_info(common, thresholds, hist_bins, convention);
        if (*vmod) return cmd_vario_mod(common, max_dists, nbins);
        if (*reg) return cmd_reg_prep(common, response, predictors);
        if (*unc) {
            bcfg.seed = seed;
            return cmd_par_uncertainty(common, max_dists, nbins, model_index, bcfg);
        }
        if (*simc) return cmd_simulate(sim);
        if (*serve) return cmd_serve(scfg, port, ttl_hours, data_dir);
    } catch (const BootstrapExhausted& e) {
        std::cerr << "error (resource): " << e.what() << "\n";
        return exit_code(ErrorKind::resource);
    } catch (const Error& e) {
        std::cerr << "error (" << kind_name(e.kind()) << "): " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
