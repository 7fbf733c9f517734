#include <catch2/catch_amalgamated.hpp>

#include "egovario/error.hpp"
#include "egovario/simfield.hpp"
#include "egovario/variogram.hpp"

using namespace egovario;

TEST_CASE("uniform points stay in the square and follow the seed", "[simfield]") {
    const auto a = uniform_points(500, 250.0, 4);
    const auto b = uniform_points(500, 250.0, 4);
    const auto c = uniform_points(500, 250.0, 5);
    CHECK(a == b);
    CHECK(a != c);
    for (const auto& p : a) {
        CHECK(p.x >= 0.0);
        CHECK(p.x <= 250.0);
        CHECK(p.y >= 0.0);
        CHECK(p.y <= 250.0);
    }
    CHECK_THROWS_AS(uniform_points(5, 0.0, 1), ValidationError);
}

TEST_CASE("simulated fields are reproducible", "[simfield]") {
    const auto coords = uniform_points(100, 500.0, 1);
    const ExpParams p{0.5, 1.5, 80.0};
    const FieldSimulator sim(coords, p);
    CHECK(sim.draw(9) == sim.draw(9));
    CHECK(sim.draw(9) != sim.draw(10));
    CHECK(simulate_field({p, coords, 9}) == sim.draw(9));
}

TEST_CASE("simulated fields have the model variance", "[simfield]") {
    // Average sample variance over many draws approaches total variance minus
    // the mean covariance; with a short range relative to the extent the gap is small.
    const auto coords = uniform_points(200, 2000.0, 2);
    const ExpParams p{1.0, 3.0, 20.0};
    const FieldSimulator sim(coords, p);
    double mean_var = 0.0;
    const int draws = 200;
    for (int k = 0; k < draws; ++k) mean_var += sample_variance(sim.draw(static_cast<std::uint64_t>(k)));
    mean_var /= draws;
    CHECK(mean_var == Catch::Approx(4.0).epsilon(0.05));
}

TEST_CASE("make_dataset wraps simulated values", "[simfield]") {
    const std::vector<Point> coords{{0, 0}, {1, 2}};
    const std::vector<double> z{3.0, 4.0};
    const auto ds = make_dataset(coords, z, "sim");
    CHECK(ds.size() == 2);
    CHECK(ds.source_name() == "sim");
    CHECK(ds[1].outcome == 4.0);
    CHECK_THROWS_AS(make_dataset(coords, std::vector<double>{1.0}), ValidationError);
    CHECK_THROWS_AS(FieldSimulator({{0, 0}}, ExpParams{0, 1, 1}), ValidationError);
}
