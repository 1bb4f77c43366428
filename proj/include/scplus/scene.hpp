#pragma once

#include <memory>

#include "scplus/segmap.hpp"
#include "scplus/trajdata.hpp"

namespace scplus {

/// A sample together with the map context it is queried against. A null map is
/// treated as fully walkable.
struct SceneCase {
    TrajectorySample sample;
    std::shared_ptr<const SegmentationMap> map;
    AffineCalib calib;
};

}  // namespace scplus
