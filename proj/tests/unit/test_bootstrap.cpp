#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "egovario/bootstrap.hpp"
#include "egovario/simfield.hpp"

using namespace egovario;

namespace {

struct Sim {
    std::vector<Point> coords;
    std::vector<double> z;
};

Sim simulated(std::size_t n, const ExpParams& p, std::uint64_t seed) {
    Sim s;
    s.coords = uniform_points(n, 1000.0, seed);
    s.z = simulate_field({p, s.coords, seed + 1});
    return s;
}

double frobenius_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("normal scores", "[bootstrap]") {
    const std::vector<double> z{2.0, 1.0, 3.0};
    const auto ns = normal_score_transform(z);
    CHECK(ns.y[1] == Catch::Approx(-0.967421566101701).epsilon(1e-12));
    CHECK(std::abs(ns.y[0]) < 1e-15);
    CHECK(ns.y[2] == Catch::Approx(0.967421566101701).epsilon(1e-12));
    CHECK(ns.table.plotting_positions()[0] == Catch::Approx(1.0 / 6.0));

    const std::vector<double> tied{1.0, 1.0, 3.0};
    const auto nt = normal_score_transform(tied);
    CHECK(nt.y[0] == nt.y[1]);
    CHECK(nt.y[0] < nt.y[2]);
    CHECK(nt.table.z().size() == 2);

    // Scores are a fixed point of the transform.
    const auto again = normal_score_transform(ns.y);
    for (std::size_t i = 0; i < 3; ++i) CHECK(again.y[i] == Catch::Approx(ns.y[i]).margin(1e-9));

    const std::vector<double> flat{4.0, 4.0, 4.0};
    CHECK_THROWS_AS(normal_score_transform(flat), NumericalError);
}

TEST_CASE("normal scores preserve rank order", "[bootstrap]") {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e(0.3);
    std::vector<double> z(200);
    for (auto& v : z) v = std::round(e(rng) * 4.0) / 4.0;
    const auto ns = normal_score_transform(z);
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (z[i] < z[j]) CHECK(ns.y[i] < ns.y[j]);
            if (z[i] == z[j]) CHECK(ns.y[i] == ns.y[j]);
        }
}

TEST_CASE("back transform", "[bootstrap]") {
    const std::vector<double> z{10.0, 20.0, 40.0};
    const auto ns = normal_score_transform(z);
    const auto round = normal_score_back_transform(ns.y, ns.table);
    for (std::size_t i = 0; i < 3; ++i) CHECK(round[i] == z[i]);
    CHECK(ns.table.back_transform(-10.0) == 10.0);
    CHECK(ns.table.back_transform(10.0) == 40.0);
    const double mid = 0.5 * (ns.y[1] + ns.y[2]);
    CHECK(ns.table.back_transform(mid) == Catch::Approx(30.0).epsilon(1e-14));
}

TEST_CASE("covariance matrix fixtures", "[bootstrap]") {
    const ExpParams p{0.5, 2.0, 100.0};
    const std::vector<Point> same{{1, 1}, {1, 1}};
    const auto c0 = build_covariance_matrix(same, p);
    CHECK((c0.array() == 2.5).all());

    const std::vector<Point> far{{0, 0}, {1e9, 0}};
    const auto c1 = build_covariance_matrix(far, p);
    CHECK(c1(0, 0) == 2.5);
    CHECK(c1(0, 1) == 0.0);

    const std::vector<Point> three{{0, 0}, {30, 40}, {-10, 5}};
    for (auto exec : {kernels::Execution::serial, kernels::Execution::parallel}) {
        const auto c = build_covariance_matrix(three, p, exec);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double d = std::hypot(three[i].x - three[j].x, three[i].y - three[j].y);
                CHECK(c(i, j) == Catch::Approx(model_covariance(p, d)).epsilon(1e-15));
            }
    }
}

TEST_CASE("decorrelate and recorrelate", "[bootstrap]") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    const std::vector<double> y{1.0, -2.0, 0.5};
    const auto d = decorrelate(id, y);
    CHECK(d.factor.lower == id);
    CHECK(d.x == Eigen::Vector3d(1.0, -2.0, 0.5));
    CHECK(recorrelate(id, d.x) == d.x);

    Eigen::MatrixXd l(2, 2);
    l << 2, 0, 1, 3;
    CHECK(recorrelate(l, Eigen::Vector2d(1, 2)) == Eigen::Vector2d(2, 7));

    const auto s = simulated(150, {0.3, 1.0, 120.0}, 17);
    const auto c = build_covariance_matrix(s.coords, {0.3, 1.0, 120.0});
    const auto dec = decorrelate(c, s.z);
    const Eigen::MatrixXd& lower = dec.factor.lower;
    CHECK(frobenius_rel(lower * lower.transpose(), c) < 1e-8);
    const Eigen::VectorXd back = recorrelate(lower, dec.x);
    for (std::size_t i = 0; i < s.z.size(); ++i) CHECK(back[i] == Catch::Approx(s.z[i]).margin(1e-8));
    const Eigen::MatrixXd linv = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(150, 150));
    const Eigen::MatrixXd white = linv * c * linv.transpose();
    CHECK((white - Eigen::MatrixXd::Identity(150, 150)).norm() < 1e-8);
}

TEST_CASE("jitter rescues a singular covariance", "[bootstrap]") {
    // Pure partial sill with duplicate locations: rank deficient.
    const std::vector<Point> pts{{0, 0}, {0, 0}, {50, 0}};
    const auto c = build_covariance_matrix(pts, {0.0, 1.0, 10.0});
    const auto f = cholesky_with_jitter(c);
    CHECK(f.jitter > 0.0);
    CHECK(f.lower.allFinite());
}

TEST_CASE("filter decisions", "[bootstrap]") {
    const double var = 2.0;
    CHECK(apply_filter({{1.0, 5.2, 10}, true, {}}, var, 3.0) == FilterDecision::discard_variance);
    CHECK(apply_filter({{1.0, 1.0, 10}, true, {}}, var, 3.0) == FilterDecision::accept);
    CHECK(apply_filter({{1.0, 1.0, 10}, false, {}}, var, 3.0) == FilterDecision::discard_nonconvergence);
    CHECK(apply_filter({{1.0, 1.0, 10}, true, "boom"}, var, 3.0) == FilterDecision::discard_nonconvergence);
    CHECK(std::string(to_string(FilterDecision::discard_variance)).size() > 0);

    // Raising tau never discards more.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int t = 0; t < 200; ++t) {
        const Candidate c{{u(rng), u(rng), 1.0}, true, {}};
        if (apply_filter(c, var, 2.0) == FilterDecision::accept) CHECK(apply_filter(c, var, 4.0) == FilterDecision::accept);
    }
}

TEST_CASE("pipeline with resampling disabled reproduces the data", "[bootstrap]") {
    const ExpParams truth{0.4, 1.2, 150.0};
    const auto s = simulated(200, truth, 31);
    const BootstrapSetup setup(s.coords, s.z, 600.0, 12);
    auto rng = replicate_stream(1, 0);
    const auto z_star = replicate_sample(setup, rng, Resampling::identity);
    for (std::size_t i = 0; i < s.z.size(); ++i) CHECK(z_star[i] == Catch::Approx(s.z[i]).epsilon(1e-8).margin(1e-12));

    const auto direct = fit_exponential(empirical_variogram(s.coords, s.z, 600.0, 12));
    auto rng2 = replicate_stream(1, 0);
    const auto cand = bootstrap_replicate(setup, rng2, Resampling::identity);
    CHECK(cand.params.nugget == Catch::Approx(direct.params.nugget).epsilon(1e-6).margin(1e-9));
    CHECK(cand.params.partial_sill == Catch::Approx(direct.params.partial_sill).epsilon(1e-6));
    CHECK(cand.params.shape == Catch::Approx(direct.params.shape).epsilon(1e-6));
}

TEST_CASE("replicates are deterministic per stream", "[bootstrap]") {
    const auto s = simulated(120, {0.4, 1.2, 150.0}, 41);
    const BootstrapSetup setup(s.coords, s.z, 500.0, 10);
    auto a = replicate_stream(7, 3);
    auto b = replicate_stream(7, 3);
    const auto ca = bootstrap_replicate(setup, a);
    const auto cb = bootstrap_replicate(setup, b);
    CHECK(ca.params == cb.params);
    auto c = replicate_stream(7, 4);
    CHECK(replicate_sample(setup, c) != replicate_sample(setup, a = replicate_stream(7, 3)));
}

TEST_CASE("white noise replicates have little partial sill", "[bootstrap]") {
    const auto s = simulated(150, {1.0, 0.0, 100.0}, 51);
    const BootstrapSetup setup(s.coords, s.z, 500.0, 10);
    std::vector<double> ratio;
    for (std::uint64_t k = 0; k < 40; ++k) {
        auto rng = replicate_stream(9, k);
        const auto c = bootstrap_replicate(setup, rng);
        if (c.failure.empty() && c.params.total_variance() > 0) ratio.push_back(rsv(c.params));
    }
    REQUIRE(ratio.size() > 20);
    std::nth_element(ratio.begin(), ratio.begin() + ratio.size() / 2, ratio.end());
    CHECK(ratio[ratio.size() / 2] < 0.5);
}

TEST_CASE("par_uncertainty smoke, determinism and accounting", "[bootstrap]") {
    const auto s = simulated(150, {0.4, 1.2, 150.0}, 61);
    const auto ds = make_dataset(s.coords, s.z);
    const auto model = fit_exponential(empirical_variogram(ds, 600.0, 12));
    BootstrapConfig cfg;
    cfg.B = 2;
    cfg.seed = 123;
    const auto t2 = par_uncertainty(ds, model, cfg);
    CHECK(t2.n_accepted == 2);
    for (const auto& r : t2.rows) CHECK(std::isfinite(r.std_error));
    CHECK(t2.rows[0].estimate == model.params.nugget);
    CHECK(t2.seed_used == 123);

    cfg.B = 30;
    cfg.workers = 1;
    std::vector<BootstrapProgress> seen;
    const auto one = par_uncertainty(ds, model, cfg, [&](const BootstrapProgress& p) { seen.push_back(p); });
    cfg.workers = 4;
    const auto four = par_uncertainty(ds, model, cfg);
    CHECK(one == four);
    CHECK(one.n_attempted == one.n_accepted + one.n_discarded);
    CHECK(one.n_discarded == one.n_discarded_variance + one.n_discarded_nonconvergence);
    REQUIRE_FALSE(seen.empty());
    CHECK(seen.back().accepted == 30);

    const auto text = format_uncertainty_table(one);
    for (const char* s : {"Estimate", "Std. Error", "nugget effect", "partial sill", "shape"})
        CHECK(text.find(s) != std::string::npos);

    cfg.seed.reset();
    cfg.B = 2;
    const auto drawn = par_uncertainty(ds, model, cfg);
    CHECK(drawn.n_accepted == 2);
}

TEST_CASE("a tiny threshold exhausts the attempt budget", "[bootstrap]") {
    const auto s = simulated(100, {0.4, 1.2, 150.0}, 71);
    const auto ds = make_dataset(s.coords, s.z);
    const auto model = fit_exponential(empirical_variogram(ds, 600.0, 10));
    BootstrapConfig cfg;
    cfg.B = 10;
    cfg.seed = 5;
    cfg.threshold_factor = 1e-6;
    cfg.max_attempt_factor = 2.0;
    try {
        (void)par_uncertainty(ds, model, cfg);
        FAIL("expected BootstrapExhausted");
    } catch (const BootstrapExhausted& e) {
        CHECK(e.partial().n_attempted == 20);
        CHECK(e.partial().n_accepted == 0);
        CHECK(e.kind() == ErrorKind::resource);
    }
}

TEST_CASE("config validation and model mismatch", "[bootstrap]") {
    BootstrapConfig cfg;
    cfg.B = 1;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = {};
    cfg.threshold_factor = 0.0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = {};
    cfg.max_attempt_factor = 0.5;
    CHECK_THROWS_AS(validate(cfg), ValidationError);

    const auto s = simulated(80, {0.4, 1.2, 150.0}, 81);
    const auto ds = make_dataset(s.coords, s.z);
    auto model = fit_exponential(empirical_variogram(ds, 600.0, 10));
    model.sample_variance *= 2.0;
    CHECK_THROWS_AS(BootstrapSetup(ds, model), ValidationError);
}
