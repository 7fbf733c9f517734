#pragma once

#include <span>
#include <string>
#include <vector>

#include "egovario/dataset.hpp"
#include "egovario/distances.hpp"
#include "egovario/expfit.hpp"

namespace egovario::plot {

struct Color {
    unsigned char r = 0, g = 0, b = 0;
};

inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kRed{220, 30, 30};
inline constexpr Color kBlue{30, 80, 200};
inline constexpr Color kGrey{170, 170, 170};

enum class MarkerShape { circle, filled_circle, cross };

struct Marker {
    double x = 0.0;
    double y = 0.0;
    MarkerShape shape = MarkerShape::circle;
    Color color = kBlack;
};

struct Polyline {
    std::vector<Point> points;
    Color color = kBlue;
};

struct Bar {
    double x0 = 0.0;
    double x1 = 0.0;
    double height = 0.0;
};

/// Single-panel chart in data coordinates. Rendering is deterministic text.
struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    std::vector<Marker> markers;
    std::vector<Polyline> lines;
    std::vector<Bar> bars;
    std::vector<std::string> notes;  ///< legend-style text lines, top right
};

inline constexpr double kWidth = 640.0;
inline constexpr double kHeight = 480.0;

[[nodiscard]] std::string render_svg(const Figure& fig);
/// One page per figure.
[[nodiscard]] std::string render_pdf(std::span<const Figure> figs);

/// Tick positions at 1/2/5 x 10^k spacing covering [lo, hi].
[[nodiscard]] std::vector<double> nice_ticks(double lo, double hi, int target = 6);

/// Observed points as filled black circles, missing outcomes as red crosses.
[[nodiscard]] Figure coords_figure(const MissingnessReport& rep, const std::string& label);
[[nodiscard]] Figure histogram_figure(const DistanceSummary& summary);
/// Empirical points as circles with the fitted exponential curve.
[[nodiscard]] Figure variogram_figure(const ModelRow& row);

/// Sampled fitted curve (lag, gamma) on (0, max_dist], used for plotting clients.
[[nodiscard]] std::vector<Point> fitted_curve(const ExpParams& params, double max_dist, std::size_t samples = 100);

}  // namespace egovario::plot
