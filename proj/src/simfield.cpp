#include "egovario/simfield.hpp"

#include <random>

#include "egovario/error.hpp"

namespace egovario {

FieldSimulator::FieldSimulator(std::vector<Point> coords, const ExpParams& params) : coords_(std::move(coords)) {
    validate(params);
    if (coords_.size() < 2) throw ValidationError("field simulation needs at least 2 locations");
    factor_ = cholesky_with_jitter(build_covariance_matrix(coords_, params));
}

std::vector<double> FieldSimulator::draw(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(coords_.size());
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = normal(rng);
    const Eigen::VectorXd z = recorrelate(factor_.lower, g);
    return {z.data(), z.data() + n};
}

std::vector<double> simulate_field(const FieldSpec& spec) {
    return FieldSimulator(spec.coords, spec.params).draw(spec.seed);
}

std::vector<Point> uniform_points(std::size_t n, double extent, std::uint64_t seed) {
    if (!(extent > 0.0)) throw ValidationError("extent must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, extent);
    std::vector<Point> pts(n);
    for (auto& p : pts) {
        p.x = u(rng);
        p.y = u(rng);
    }
    return pts;
}

SpatialDataset make_dataset(const std::vector<Point>& coords, const std::vector<double>& z, std::string label) {
    if (coords.size() != z.size()) throw ValidationError("coordinate and outcome counts differ");
    std::vector<Record> records(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) records[i] = {coords[i].x, coords[i].y, z[i], {}};
    return SpatialDataset({"x", "y", "outcome"}, std::move(records), std::move(label));
}

}  // namespace egovario
