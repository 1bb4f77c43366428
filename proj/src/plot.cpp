#include "scplus/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace scplus {

Path to_scene(const Path& path, const Vec2& origin_offset) {
    Path out;
    out.reserve(path.size());
    for (const auto& p : path) out.push_back(p + origin_offset);
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void polyline(std::ostream& out, const Path& path, const AffineCalib& calib, const char* color, double width,
              double opacity, bool dashed, bool start_from_anchor = false, const Vec2* anchor = nullptr) {
    if (path.empty()) return;
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt(width) << "\" stroke-opacity=\""
        << fmt(opacity) << "\"" << (dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
    auto put = [&](const Vec2& p) {
        const Vec2 px = calib.to_pixel(p);
        out << fmt(px.x()) << ',' << fmt(px.y()) << ' ';
    };
    if (start_from_anchor && anchor) put(*anchor);
    for (const auto& p : path) put(p);
    out << "\"/>\n";
}

}  // namespace

void write_svg(std::ostream& out, const PlotScene& s) {
    double x0, y0, x1, y1;
    if (s.map) {
        x0 = 0.0;
        y0 = 0.0;
        x1 = s.map->width * s.map->col_scale;
        y1 = s.map->height * s.map->row_scale;
    } else {
        x0 = y0 = std::numeric_limits<double>::infinity();
        x1 = y1 = -x0;
        auto grow = [&](const Path& path) {
            for (const auto& p : path) {
                const Vec2 px = s.calib.to_pixel(p);
                x0 = std::min(x0, px.x());
                y0 = std::min(y0, px.y());
                x1 = std::max(x1, px.x());
                y1 = std::max(y1, px.y());
            }
        };
        grow(s.observed);
        grow(s.truth);
        for (const auto* group : {&s.neighbors, &s.factual, &s.counterfactual, &s.manual_neighbors})
            for (const auto& p : *group) grow(p);
        if (!(x0 <= x1)) x0 = y0 = 0.0, x1 = y1 = 1.0;
        const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1.0});
        x0 -= pad;
        y0 -= pad;
        x1 += pad;
        y1 += pad;
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(x0) << ' ' << fmt(y0) << ' ' << fmt(x1 - x0)
        << ' ' << fmt(y1 - y0) << "\" width=\"800\" height=\"" << fmt(800.0 * (y1 - y0) / (x1 - x0)) << "\">\n";
    out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(x1 - x0) << "\" height=\""
        << fmt(y1 - y0) << "\" fill=\"white\"/>\n";
    if (s.map) {
        out << "<g id=\"map\" stroke=\"none\">\n";
        for (int r = 0; r < s.map->height; ++r)
            for (int c = 0; c < s.map->width; ++c) {
                const double w = s.map->at(r, c);
                if (w <= 0.0) continue;
                const int g = static_cast<int>(std::lround(255.0 * (1.0 - std::min(w, 1.0))));
                out << "<rect x=\"" << fmt(c * s.map->col_scale) << "\" y=\"" << fmt(r * s.map->row_scale)
                    << "\" width=\"" << fmt(s.map->col_scale) << "\" height=\"" << fmt(s.map->row_scale)
                    << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
            }
        out << "</g>\n";
    }
    const Vec2* anchor = s.observed.empty() ? nullptr : &s.observed.back();
    for (const auto& p : s.neighbors) polyline(out, p, s.calib, "#666666", 1.0, 0.8, false);
    polyline(out, s.truth, s.calib, "#2ca02c", 1.5, 0.35, false, true, anchor);
    for (const auto& p : s.factual) polyline(out, p, s.calib, "#1f77b4", 1.0, 0.6, false, true, anchor);
    for (const auto& p : s.counterfactual) polyline(out, p, s.calib, "#ff7f0e", 1.0, 0.6, false, true, anchor);
    for (const auto& p : s.manual_neighbors) polyline(out, p, s.calib, "#d62728", 1.5, 1.0, true);
    polyline(out, s.observed, s.calib, "#000000", 2.0, 1.0, false);
    out << "</svg>\n";
}

}  // namespace scplus
