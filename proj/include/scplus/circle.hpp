#pragma once

// Angle-partitioned circle representations.
//
// Partition j covers bearings [2*pi*j/N, 2*pi*(j+1)/N) measured counterclockwise from
// the +x axis of the scene frame, centered on the target's last observed position.
//
// Social rows are (velocity, distance, direction):
//   velocity   mean per-step speed of the assigned neighbors over the observed window
//   distance   mean distance to the target at the last observed step
//   direction  circular mean of the neighbors' last-step headings, in [0, 2*pi)
//
// Physical rows are (obstruction, clearance, bearing), from a polar scan of the map:
//   obstruction  mean weight of the scan points in the partition, in [0, 1]
//   clearance    smallest scan radius whose weight is >= 0.5, or the scan radius R
//   bearing      weight-averaged angular offset of the scan points from the partition start
//
// A row is "occupied" when it carries information: a partition with at least one
// neighbor, or one whose scan touched a nonzero weight. Unoccupied rows encode to
// exact zero features, so an empty scene yields S = 0 and P = 0.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "scplus/scene.hpp"
#include "scplus/segmap.hpp"
#include "scplus/trajdata.hpp"

namespace scplus {

using MetaRow = std::array<double, 3>;
using Features = Eigen::MatrixXd;  // one row per partition (or step)

struct CircleSpec {
    int n_theta = 8;
    double r_min = 1.0;
    int n_ray = 4;
    int n_rad = 8;
    std::size_t k_neighbors = 50;

    void validate() const;
};

struct CircleRep {
    std::vector<MetaRow> rows;
    std::vector<bool> occupied;

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
};

struct SocialCircleRep : CircleRep {
    std::vector<int> counts;  // neighbors per partition
};

struct PhysicalCircleRep : CircleRep {
    double radius = 0.0;
};

enum class FusionMode { hard, adaptive };

FusionMode parse_fusion_mode(std::string_view name);
std::string_view to_string(FusionMode mode) noexcept;

double wrap_angle(double angle) noexcept;  // into [0, 2*pi)
int partition_index(double angle, int n_theta) noexcept;

SocialCircleRep social_circle(const TrajectorySample& sample, std::span<const std::size_t> neighbor_ids,
                              const CircleSpec& spec);

double scan_radius(const TrajectorySample& sample, const CircleSpec& spec);

/// Scans the map around the target's last observed position (scene = sample + origin_offset).
PhysicalCircleRep physical_circle(const TrajectorySample& sample, const SegmentationMap* map,
                                  const AffineCalib& calib, const CircleSpec& spec);

/// Shared row encoder: features_j = tanh(W * row_j + b) for occupied rows, 0 otherwise.
/// `weights` is d_sc x 3, `bias` is d_sc.
Features encode(const CircleRep& rep, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                const Eigen::Ref<const Eigen::VectorXd>& bias);

struct FusionResult {
    Features fused;
    Eigen::VectorXd gates;  // adaptive mode only, one per partition
};

/// hard:      f = f_s + f_p
/// adaptive:  g_j = sigmoid(u . [f_s_j, f_p_j] + c),  f_j = f_s_j + g_j * f_p_j
/// `gate_u` has 2*d_sc entries and is ignored in hard mode.
FusionResult fuse(const Features& f_s, const Features& f_p, FusionMode mode,
                  const Eigen::Ref<const Eigen::VectorXd>& gate_u = Eigen::VectorXd(), double gate_c = 0.0);

/// Fits an N_theta-row sequence to `steps` rows. N_theta < steps pads zeros at the tail;
/// N_theta > steps is only allowed for padded backbones, in which case the sequence is
/// returned unchanged and the trajectory side is padded instead.
Features align_to_backbone(const Features& fused, int steps, bool padded_backbone);

/// Sequence length seen by the backbone.
int backbone_length(int n_theta, int t_h, bool padded_backbone);

void write_rep_csv(std::ostream& out, const CircleRep& rep, std::string_view kind);

}  // namespace scplus
