#pragma once

// Desk-scale synthetic scenarios.
//
// Every kind is simulated as a set of short episodes laid out on disjoint frame ranges
// of one SceneClip, so a synthetic set serializes to the ordinary annotation format
// plus one map. Agents walk with a dominant heading near 45 degrees.
//
//   crossing  two agents on intersecting straight paths; mutual repulsion bends
//             them once they get close (after the observed window in most cases)
//   overtake  two agents on parallel lanes at different speeds
//   obstacle  one agent heading for a goal behind a blocked rectangle; the future
//             detours around an inflated copy of the rectangle
//   isolated  one agent walking straight, empty map

#include <cstdint>
#include <string_view>
#include <vector>

#include "scplus/scene.hpp"
#include "scplus/segmap.hpp"
#include "scplus/trajdata.hpp"

namespace scplus {

enum class ScenarioKind { crossing, overtake, obstacle, isolated };

ScenarioKind parse_scenario_kind(std::string_view name);
std::string_view to_string(ScenarioKind kind) noexcept;

struct SyntheticConfig {
    double speed_min = 0.8;   // units / step
    double speed_max = 1.6;
    double jitter = 0.05;     // position noise sigma
    double heading = 0.7853981633974483;
    double heading_spread = 0.25;
    double world = 40.0;      // square scene extent in units
    double pixels_per_unit = 10.0;
    int map_cells = 100;
    double repulsion = 1.2;   // social force magnitude
    double repulsion_range = 1.0;
    double obstacle_margin = 0.9;
};

struct SyntheticSet {
    ScenarioKind kind = ScenarioKind::isolated;
    SceneClip clip;
    std::vector<TrajectorySample> samples;
    SegmentationMap map;
    AffineCalib calib;
};

SyntheticSet generate_synthetic(ScenarioKind kind, std::size_t n, std::uint64_t seed, const SampleSpec& spec,
                                const SyntheticConfig& cfg = {});

/// Pairs each synthetic sample with the set's map.
std::vector<SceneCase> to_cases(const SyntheticSet& set);

}  // namespace scplus
