#pragma once

// Segmentation maps: pooled walkability grids, pixel calibration and box painting.
//
// Weights follow the labeling convention 0.0 = walkable, 1.0 = blocked, with 0.5 for
// conditionally walkable areas. A cell at (row, col) covers pixels
// [col * col_scale, (col + 1) * col_scale) horizontally and
// [row * row_scale, (row + 1) * row_scale) vertically; pixel x maps to columns and
// pixel y to rows.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scplus/trajdata.hpp"

namespace scplus {

/// Raw (unpooled) weight raster, row-major.
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    Grid() = default;
    Grid(int r, int c, double fill = 0.0) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

    [[nodiscard]] double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct SegmentationMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // height x width, row-major
    double row_scale = 1.0;      // raw pixels per cell, vertical
    double col_scale = 1.0;      // raw pixels per cell, horizontal

    SegmentationMap() = default;
    SegmentationMap(int h, int w, double fill = 0.0, double rs = 1.0, double cs = 1.0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill), row_scale(rs), col_scale(cs) {}

    [[nodiscard]] double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }

    void validate() const;
    friend bool operator==(const SegmentationMap&, const SegmentationMap&) = default;
};

/// Per-axis affine scene -> pixel transform: pixel = w (*) scene + b.
struct AffineCalib {
    Vec2 w = Vec2(1.0, 1.0);
    Vec2 b = Vec2(0.0, 0.0);

    [[nodiscard]] Vec2 to_pixel(const Vec2& p) const { return w.cwiseProduct(p) + b; }
    [[nodiscard]] Vec2 to_scene(const Vec2& px) const { return (px - b).cwiseQuotient(w); }
    void validate() const;
};

struct CalibPair {
    Vec2 scene;
    Vec2 pixel;
};

struct CalibFit {
    AffineCalib calib;
    double residual_rms = 0.0;  // sqrt(mean ||w*p + b - pixel||^2)
};

struct BoundingBox {
    Vec2 min;  // pixels
    Vec2 max;  // pixels
    double label = 1.0;
};

struct BoxApplication {
    SegmentationMap map;
    std::size_t cells_covered = 0;  // 0 means the box missed the map
};

struct MapQuery {
    double weight = 0.0;
    bool clamped = false;
};

/// Mean pooling; remainder rows/columns are absorbed by the last cells.
SegmentationMap pool_map(const Grid& raw, int out_height, int out_width);

CalibFit fit_calibration(std::span<const CalibPair> pairs);
double calibration_residual(const AffineCalib& calib, std::span<const CalibPair> pairs);

BoxApplication apply_box(const SegmentationMap& map, const BoundingBox& box);

MapQuery query_map(const SegmentationMap& map, const Vec2& scene, const AffineCalib& calib);
inline double walkability(const SegmentationMap& map, const Vec2& scene, const AffineCalib& calib) {
    return query_map(map, scene, calib).weight;
}

/// 8-bit binary PGM (P5); byte / 255 is the weight. Cell scales travel in a header comment.
void write_pgm(const std::filesystem::path& path, const SegmentationMap& map);
SegmentationMap read_pgm(const std::filesystem::path& path);
std::uint8_t quantize_weight(double w) noexcept;

/// Row-major run-length encoding of the 8-bit quantized map: [value, run, value, run, ...].
std::vector<int> run_length_encode(const SegmentationMap& map);

std::vector<CalibPair> read_calib_csv(const std::filesystem::path& path);

}  // namespace scplus
