#include "egovario/plot.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

namespace egovario::plot {

namespace {

enum class Anchor { start, middle, end };

// Drawing surface in pixel coordinates, origin top-left.
class Canvas {
public:
    virtual ~Canvas() = default;
    virtual void line(double x1, double y1, double x2, double y2, Color c, double width) = 0;
    virtual void polyline(const std::vector<Point>& pts, Color c, double width) = 0;
    virtual void circle(double cx, double cy, double r, Color stroke, std::optional<Color> fill) = 0;
    virtual void rect(double x, double y, double w, double h, Color stroke, std::optional<Color> fill) = 0;
    virtual void text(double x, double y, const std::string& s, double size, Anchor anchor, bool vertical) = 0;
};

std::string svg_color(Color c) { return fmt::format("rgb({},{},{})", c.r, c.g, c.b); }

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

class SvgCanvas final : public Canvas {
public:
    std::string body;

    void line(double x1, double y1, double x2, double y2, Color c, double width) override {
        body += fmt::format(R"svg(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="{}" stroke-width="{:.2f}"/>)svg",
                            x1, y1, x2, y2, svg_color(c), width);
        body += '\n';
    }
    void polyline(const std::vector<Point>& pts, Color c, double width) override {
        std::string coords;
        for (const auto& p : pts) coords += fmt::format("{}{:.2f},{:.2f}", coords.empty() ? "" : " ", p.x, p.y);
        body += fmt::format(R"svg(<polyline points="{}" fill="none" stroke="{}" stroke-width="{:.2f}"/>)svg", coords,
                            svg_color(c), width);
        body += '\n';
    }
    void circle(double cx, double cy, double r, Color stroke, std::optional<Color> fill) override {
        body += fmt::format(R"svg(<circle cx="{:.2f}" cy="{:.2f}" r="{:.2f}" stroke="{}" fill="{}"/>)svg", cx, cy, r,
                            svg_color(stroke), fill ? svg_color(*fill) : "none");
        body += '\n';
    }
    void rect(double x, double y, double w, double h, Color stroke, std::optional<Color> fill) override {
        body += fmt::format(R"svg(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" stroke="{}" fill="{}"/>)svg", x,
                            y, w, h, svg_color(stroke), fill ? svg_color(*fill) : "none");
        body += '\n';
    }
    void text(double x, double y, const std::string& s, double size, Anchor anchor, bool vertical) override {
        const char* a = anchor == Anchor::start ? "start" : anchor == Anchor::middle ? "middle" : "end";
        const std::string rot = vertical ? fmt::format(R"svg( transform="rotate(-90 {:.2f} {:.2f})")svg", x, y) : "";
        body += fmt::format(R"svg(<text x="{:.2f}" y="{:.2f}" font-family="Helvetica, Arial, sans-serif" font-size="{:.1f}" text-anchor="{}"{}>{}</text>)svg",
                            x, y, size, a, rot, svg_escape(s));
        body += '\n';
    }
};

std::string pdf_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '(' || ch == ')' || ch == '\\') out += '\\';
        out += ch;
    }
    return out;
}

std::string pdf_rgb(Color c) { return fmt::format("{:.3f} {:.3f} {:.3f}", c.r / 255.0, c.g / 255.0, c.b / 255.0); }

class PdfCanvas final : public Canvas {
public:
    std::string ops;

    void line(double x1, double y1, double x2, double y2, Color c, double width) override {
        ops += fmt::format("{} RG {:.2f} w {:.2f} {:.2f} m {:.2f} {:.2f} l S\n", pdf_rgb(c), width, x1, fy(y1), x2,
                           fy(y2));
    }
    void polyline(const std::vector<Point>& pts, Color c, double width) override {
        if (pts.empty()) return;
        ops += fmt::format("{} RG {:.2f} w {:.2f} {:.2f} m", pdf_rgb(c), width, pts[0].x, fy(pts[0].y));
        for (std::size_t i = 1; i < pts.size(); ++i) ops += fmt::format(" {:.2f} {:.2f} l", pts[i].x, fy(pts[i].y));
        ops += " S\n";
    }
    void circle(double cx, double cy, double r, Color stroke, std::optional<Color> fill) override {
        // Four cubic Bezier arcs.
        constexpr double k = 0.5522847498;
        const double y = fy(cy);
        ops += fmt::format("{} RG 0.8 w ", pdf_rgb(stroke));
        if (fill) ops += fmt::format("{} rg ", pdf_rgb(*fill));
        ops += fmt::format("{:.2f} {:.2f} m ", cx + r, y);
        ops += fmt::format("{:.2f} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} c ", cx + r, y + k * r, cx + k * r, y + r, cx, y + r);
        ops += fmt::format("{:.2f} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} c ", cx - k * r, y + r, cx - r, y + k * r, cx - r, y);
        ops += fmt::format("{:.2f} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} c ", cx - r, y - k * r, cx - k * r, y - r, cx, y - r);
        ops += fmt::format("{:.2f} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} c ", cx + k * r, y - r, cx + r, y - k * r, cx + r, y);
        ops += fill ? "b\n" : "s\n";
    }
    void rect(double x, double y, double w, double h, Color stroke, std::optional<Color> fill) override {
        ops += fmt::format("{} RG 0.8 w ", pdf_rgb(stroke));
        if (fill) ops += fmt::format("{} rg ", pdf_rgb(*fill));
        ops += fmt::format("{:.2f} {:.2f} {:.2f} {:.2f} re {}\n", x, fy(y + h), w, h, fill ? "B" : "S");
    }
    void text(double x, double y, const std::string& s, double size, Anchor anchor, bool vertical) override {
        // Helvetica averages roughly half an em per glyph.
        const double w = 0.5 * size * static_cast<double>(s.size());
        const double shift = anchor == Anchor::start ? 0.0 : anchor == Anchor::middle ? w / 2 : w;
        if (vertical)
            ops += fmt::format("0 0 0 rg BT /F1 {:.1f} Tf 0 1 -1 0 {:.2f} {:.2f} Tm ({}) Tj ET\n", size, x,
                               fy(y) - shift, pdf_escape(s));
        else
            ops += fmt::format("0 0 0 rg BT /F1 {:.1f} Tf {:.2f} {:.2f} Td ({}) Tj ET\n", size, x - shift, fy(y),
                               pdf_escape(s));
    }

private:
    static double fy(double y) { return kHeight - y; }
};

std::string tick_label(double v) {
    if (std::fabs(v) < 1e-12) return "0";
    return fmt::format("{:g}", v);
}

void draw(const Figure& fig, Canvas& cv) {
    constexpr double left = 72.0, right = 24.0, top = 40.0, bottom = 56.0;
    const double pw = kWidth - left - right;
    const double ph = kHeight - top - bottom;
    const double xspan = fig.x_max > fig.x_min ? fig.x_max - fig.x_min : 1.0;
    const double yspan = fig.y_max > fig.y_min ? fig.y_max - fig.y_min : 1.0;
    auto px = [&](double x) { return left + (x - fig.x_min) / xspan * pw; };
    auto py = [&](double y) { return top + ph - (y - fig.y_min) / yspan * ph; };

    cv.rect(0, 0, kWidth, kHeight, Color{255, 255, 255}, Color{255, 255, 255});
    for (const auto& b : fig.bars)
        cv.rect(px(b.x0), py(b.height), px(b.x1) - px(b.x0), py(fig.y_min) - py(b.height), kBlack, kGrey);
    cv.rect(left, top, pw, ph, kBlack, std::nullopt);

    for (double t : nice_ticks(fig.x_min, fig.x_max)) {
        cv.line(px(t), top + ph, px(t), top + ph + 5, kBlack, 0.8);
        cv.text(px(t), top + ph + 18, tick_label(t), 10, Anchor::middle, false);
    }
    for (double t : nice_ticks(fig.y_min, fig.y_max)) {
        cv.line(left - 5, py(t), left, py(t), kBlack, 0.8);
        cv.text(left - 8, py(t) + 3.5, tick_label(t), 10, Anchor::end, false);
    }
    cv.text(kWidth / 2, 24, fig.title, 14, Anchor::middle, false);
    cv.text(left + pw / 2, kHeight - 14, fig.x_label, 12, Anchor::middle, false);
    cv.text(18, top + ph / 2, fig.y_label, 12, Anchor::middle, true);

    for (const auto& l : fig.lines) {
        std::vector<Point> pts;
        for (const auto& p : l.points) pts.push_back({px(p.x), py(p.y)});
        cv.polyline(pts, l.color, 1.6);
    }
    for (const auto& m : fig.markers) {
        const double x = px(m.x), y = py(m.y);
        switch (m.shape) {
            case MarkerShape::circle: cv.circle(x, y, 3.5, m.color, std::nullopt); break;
            case MarkerShape::filled_circle: cv.circle(x, y, 2.5, m.color, m.color); break;
            case MarkerShape::cross:
                cv.line(x - 3.5, y - 3.5, x + 3.5, y + 3.5, m.color, 1.4);
                cv.line(x - 3.5, y + 3.5, x + 3.5, y - 3.5, m.color, 1.4);
                break;
        }
    }
    double ny = top + 16;
    for (const auto& note : fig.notes) {
        cv.text(left + pw - 8, ny, note, 10, Anchor::end, false);
        ny += 14;
    }
}

void pad_range(double& lo, double& hi, double frac) {
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
        return;
    }
    const double pad = (hi - lo) * frac;
    lo -= pad;
    hi += pad;
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int target) {
    std::vector<double> ticks;
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return ticks;
    const double raw = (hi - lo) / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = (norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0) * mag;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
        ticks.push_back(std::fabs(t) < 1e-12 * step ? 0.0 : t);
    return ticks;
}

std::string render_svg(const Figure& fig) {
    SvgCanvas cv;
    draw(fig, cv);
    return fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\">\n"
        "{2}</svg>\n",
        kWidth, kHeight, cv.body);
}

std::string render_pdf(std::span<const Figure> figs) {
    // Objects: 1 catalog, 2 pages, 3 font, then (page, content) per figure.
    std::vector<std::string> objects;
    std::string kids;
    for (std::size_t i = 0; i < figs.size(); ++i) kids += fmt::format("{} 0 R ", 4 + 2 * i);
    objects.push_back("<< /Type /Catalog /Pages 2 0 R >>");
    objects.push_back(fmt::format("<< /Type /Pages /Kids [{}] /Count {} >>", kids, figs.size()));
    objects.push_back("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>");
    for (std::size_t i = 0; i < figs.size(); ++i) {
        PdfCanvas cv;
        draw(figs[i], cv);
        objects.push_back(fmt::format(
            "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {:.0f} {:.0f}] /Resources << /Font << /F1 3 0 R >> >> "
            "/Contents {} 0 R >>",
            kWidth, kHeight, 5 + 2 * i));
        objects.push_back(fmt::format("<< /Length {} >>\nstream\n{}endstream", cv.ops.size(), cv.ops));
    }
    std::string out = "%PDF-1.4\n";
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        offsets.push_back(out.size());
        out += fmt::format("{} 0 obj\n{}\nendobj\n", i + 1, objects[i]);
    }
    const std::size_t xref = out.size();
    out += fmt::format("xref\n0 {}\n0000000000 65535 f \n", objects.size() + 1);
    for (auto off : offsets) out += fmt::format("{:010} 00000 n \n", off);
    out += fmt::format("trailer\n<< /Size {} /Root 1 0 R >>\nstartxref\n{}\n%%EOF\n", objects.size() + 1, xref);
    return out;
}

Figure coords_figure(const MissingnessReport& rep, const std::string& label) {
    Figure fig;
    fig.title = "Coordinates: " + label;
    fig.x_label = "x [m]";
    fig.y_label = "y [m]";
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto extend = [&](const Point& p) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    };
    for (const auto& p : rep.observed_points) {
        extend(p);
        fig.markers.push_back({p.x, p.y, MarkerShape::filled_circle, kBlack});
    }
    for (const auto& p : rep.missing_points) {
        extend(p);
        fig.markers.push_back({p.x, p.y, MarkerShape::cross, kRed});
    }
    if (rep.n_total == 0) x0 = y0 = 0, x1 = y1 = 1;
    pad_range(x0, x1, 0.04);
    pad_range(y0, y1, 0.04);
    fig.x_min = x0, fig.x_max = x1, fig.y_min = y0, fig.y_max = y1;
    fig.notes.push_back(fmt::format("observed: {}", rep.observed_points.size()));
    fig.notes.push_back(fmt::format("missing outcome: {}", rep.n_missing_outcome));
    return fig;
}

Figure histogram_figure(const DistanceSummary& s) {
    Figure fig;
    fig.title = "Pairwise Euclidean distances";
    fig.x_label = "distance [m]";
    fig.y_label = "count";
    std::size_t top = 0;
    for (const auto& b : s.histogram) {
        fig.bars.push_back({b.lower, b.upper, static_cast<double>(b.count)});
        top = std::max(top, b.count);
    }
    fig.x_min = 0.0;
    fig.x_max = s.histogram.empty() ? 1.0 : s.histogram.back().upper;
    fig.y_min = 0.0;
    fig.y_max = std::max(1.0, 1.05 * static_cast<double>(top));
    fig.notes.push_back(fmt::format("Min {:.0f}  Q1 {:.0f}  Median {:.0f}", s.min, s.q1, s.median));
    fig.notes.push_back(fmt::format("Mean {:.0f}  Q3 {:.0f}  Max {:.0f}", s.mean, s.q3, s.max));
    return fig;
}

std::vector<Point> fitted_curve(const ExpParams& params, double max_dist, std::size_t samples) {
    std::vector<Point> curve;
    curve.reserve(samples);
    for (std::size_t i = 1; i <= samples; ++i) {
        const double h = max_dist * static_cast<double>(i) / static_cast<double>(samples);
        curve.push_back({h, eval_exponential(params, h)});
    }
    return curve;
}

Figure variogram_figure(const ModelRow& row) {
    Figure fig;
    fig.title = fmt::format("Model {}: max.dist = {:g}, nbins = {}", row.index, row.cell.max_dist, row.cell.nbins);
    fig.x_label = "distance [m]";
    fig.y_label = "semivariance";
    fig.x_min = 0.0;
    fig.x_max = row.cell.max_dist;
    double top = 0.0;
    if (row.variogram) {
        for (const auto& b : row.variogram->bins) {
            fig.markers.push_back({b.mean_dist, b.gamma_hat, MarkerShape::circle, kBlue});
            top = std::max(top, b.gamma_hat);
        }
    }
    if (row.fit) {
        Polyline line;
        line.color = kRed;
        line.points = fitted_curve(row.fit->params, row.cell.max_dist);
        for (const auto& p : line.points) top = std::max(top, p.y);
        fig.lines.push_back(std::move(line));
        fig.notes.push_back(fmt::format("nugget {:.4g}  partial sill {:.4g}  shape {:.4g}", row.fit->params.nugget,
                                        row.fit->params.partial_sill, row.fit->params.shape));
        fig.notes.push_back(fmt::format("RSV {:.3g}  rel.bias {:.3g}", row.fit->rsv, row.fit->rel_bias));
    } else if (!row.error.empty()) {
        fig.notes.push_back("fit failed: " + row.error);
    }
    fig.y_min = 0.0;
    fig.y_max = top > 0.0 ? 1.1 * top : 1.0;
    return fig;
}

}  // namespace egovario::plot
