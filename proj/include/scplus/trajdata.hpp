#pragma once

// Annotation ingestion, fixed-horizon sample assembly, neighbor queries and splits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace scplus {

using Vec2 = Eigen::Vector2d;
using Path = std::vector<Vec2>;

struct SampleSpec {
    int t_h = 8;       // observed steps
    int t_f = 12;      // future steps
    double dt = 0.4;   // seconds per step

    [[nodiscard]] int window() const noexcept { return t_h + t_f; }
    void validate() const;
};

enum class Unit { meters, pixels, inches };

Unit parse_unit(std::string_view name);
std::string_view to_string(Unit unit) noexcept;

struct Record {
    std::int64_t frame_id = 0;
    std::int64_t agent_id = 0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Record&, const Record&) = default;
};

struct SceneClip {
    std::string clip_id;
    Unit unit = Unit::meters;
    std::vector<Record> records;  // sorted by (frame_id, agent_id)
};

struct Neighbor {
    std::int64_t agent_id = 0;
    Path observed;  // t_h positions, sample frame
};

/// One prediction case. All positions are expressed in the sample frame, where the
/// target's last observed position is the origin; `origin_offset` maps back to scene
/// coordinates (scene = sample + origin_offset).
struct TrajectorySample {
    std::string clip_id;
    std::int64_t target_id = 0;
    std::int64_t start_frame = 0;
    Path observed;
    Path future;  // empty for pure-inference samples
    std::vector<Neighbor> neighbors;
    Vec2 origin_offset = Vec2::Zero();
};

/// Stable content hash; used to derive per-sample noise streams.
std::uint64_t sample_key(const TrajectorySample& sample);

struct BuildResult {
    std::vector<TrajectorySample> samples;
    std::size_t skipped_agents = 0;  // agents that never fill a complete window
};

struct SplitPlan {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::vector<std::string> warnings;
};

SceneClip parse_annotations(std::istream& in, Unit unit, std::string clip_id);
SceneClip load_annotations(const std::filesystem::path& path, Unit unit);
void write_annotations(std::ostream& out, const SceneClip& clip);

BuildResult build_samples(const SceneClip& clip, const SampleSpec& spec, int stride = 1);

/// Indices into `sample.neighbors`, nearest first at the last observed step.
std::vector<std::size_t> nearest_neighbors(const TrajectorySample& sample, std::size_t k);

SplitPlan leave_one_out_splits(std::span<const SceneClip> clips, std::string_view held_out,
                               std::span<const std::string> val_ids = {});

/// Seeded subsample without replacement; order of the survivors is preserved.
std::vector<TrajectorySample> random_subsample(std::span<const TrajectorySample> samples,
                                               std::size_t count, std::uint64_t seed);

}  // namespace scplus
