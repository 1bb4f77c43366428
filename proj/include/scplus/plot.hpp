#pragma once

// SVG overlays of a scene: map cells in gray, observed track solid, ground truth
// faint, factual predictions blue, counterfactual predictions orange, manual
// neighbors dashed. Drawing happens in map pixel space.

#include <iosfwd>
#include <vector>

#include "scplus/segmap.hpp"
#include "scplus/trajdata.hpp"

namespace scplus {

struct PlotScene {
    const SegmentationMap* map = nullptr;
    AffineCalib calib;
    // All paths in scene coordinates.
    Path observed;
    Path truth;
    std::vector<Path> neighbors;
    std::vector<Path> factual;
    std::vector<Path> counterfactual;
    std::vector<Path> manual_neighbors;
};

void write_svg(std::ostream& out, const PlotScene& scene);

/// Sample-frame path to scene coordinates.
Path to_scene(const Path& path, const Vec2& origin_offset);

}  // namespace scplus
