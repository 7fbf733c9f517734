#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "egovario/covariance.hpp"
#include "egovario/dataset.hpp"
#include "egovario/expfit.hpp"

namespace egovario {

struct FieldSpec {
    ExpParams params;
    std::vector<Point> coords;
    std::uint64_t seed = 0;
};

/// Gaussian field with the exponential covariance of spec.params: z = L g, g ~ N(0, I) from the seed.
[[nodiscard]] std::vector<double> simulate_field(const FieldSpec& spec);

/// Factorizes once; draw() then costs one triangular mat-vec per field.
class FieldSimulator {
public:
    FieldSimulator(std::vector<Point> coords, const ExpParams& params);

    [[nodiscard]] std::vector<double> draw(std::uint64_t seed) const;
    [[nodiscard]] const std::vector<Point>& coords() const noexcept { return coords_; }
    [[nodiscard]] double jitter() const noexcept { return factor_.jitter; }

private:
    std::vector<Point> coords_;
    CholeskyFactor factor_;
};

/// n points uniform on [0, extent]^2.
[[nodiscard]] std::vector<Point> uniform_points(std::size_t n, double extent, std::uint64_t seed);

/// x, y, outcome dataset from simulated values.
[[nodiscard]] SpatialDataset make_dataset(const std::vector<Point>& coords, const std::vector<double>& z,
                                          std::string label = "simulated");

}  // namespace egovario
