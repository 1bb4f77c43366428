#pragma once

// Counterfactual interventions on the social (S) and physical (P) variables.
//
// Representation-level kinds (zero_s, zero_p, fix_s, fix_p) replace the encoded
// features f_s / f_p and recompute everything downstream; nothing upstream of the
// replaced variable is touched. Input-level kinds (manual neighbor, physical box) edit
// the scene and recompute S or P from it. Factual and counterfactual predictions share
// one noise stream, so any divergence is due to the intervention alone.

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scplus/json_io.hpp"
#include "scplus/predictor.hpp"
#include "scplus/scene.hpp"
#include "scplus/segmap.hpp"

namespace scplus {

/// p_t = p0 + (p_end - p0) * t / t_h, t = 0..t_h
Path manual_neighbor_linear(const Vec2& p0, const Vec2& p_end, int t_h);

/// Velocity-interpolated neighbor: v_t = v0 + t * dv with
/// dv = 2 (p_end - p0 - v0 t_h) / (t_h (t_h + 1)), and p_t = p0 + t v0 + dv t (t + 1) / 2.
Path manual_neighbor_nonlinear(const Vec2& p0, const Vec2& v0, const Vec2& p_end, int t_h);

/// The velocity increment dv of the nonlinear interpolation.
Vec2 manual_neighbor_dv(const Vec2& p0, const Vec2& v0, const Vec2& p_end, int t_h);

struct ZeroS {};
struct ZeroP {};
struct FixS {
    Features value;
};
struct FixP {
    Features value;
};
enum class InterpolationMode { linear, nonlinear };
struct ManualNeighborSpec {
    InterpolationMode mode = InterpolationMode::linear;
    Vec2 p0 = Vec2::Zero();     // sample frame
    Vec2 p_end = Vec2::Zero();  // position at the last observed step
    std::optional<Vec2> v0;     // required for nonlinear mode
};
struct PhysicalBox {
    BoundingBox box;
};

using InterventionSpec = std::variant<ZeroS, ZeroP, FixS, FixP, ManualNeighborSpec, PhysicalBox>;

std::string kind_name(const InterventionSpec& spec);

/// Throws ConfigError when the spec does not fit the model (e.g. P interventions on a
/// model without a physical branch, or fixed values of the wrong shape).
void validate_spec(const InterventionSpec& spec, const ModelConfig& config);

/// The t_h observed positions contributed by a manual neighbor (steps 1..t_h).
Path manual_neighbor_track(const ManualNeighborSpec& spec, int t_h);

struct CounterfactualScene {
    SceneCase scene;           // sample/map after input-level edits
    RepOverrides overrides;    // representation-level replacements
    std::vector<Path> manual_neighbors;
};

CounterfactualScene apply_interventions(const ModelConfig& config, const SceneCase& base,
                                        std::span<const InterventionSpec> specs);

struct InterventionOutcome {
    PredictionSet factual;
    PredictionSet counterfactual;
    PreparedInputs factual_inputs;
    PreparedInputs counterfactual_inputs;
    CounterfactualScene edited;
};

InterventionOutcome intervene(const PredictorParams& params, const SceneCase& scene,
                              std::span<const InterventionSpec> specs, int k, std::uint64_t seed);
inline InterventionOutcome intervene(const PredictorParams& params, const SceneCase& scene,
                                     const InterventionSpec& spec, int k, std::uint64_t seed) {
    return intervene(params, scene, std::span<const InterventionSpec>(&spec, 1), k, seed);
}

struct DivergenceReport {
    double mean_displacement = 0.0;  // over matched trajectories and steps
    double max_displacement = 0.0;
    std::optional<double> ade_factual, ade_counterfactual, fde_factual, fde_counterfactual;

    [[nodiscard]] double ade_delta() const { return ade_factual ? *ade_counterfactual - *ade_factual : 0.0; }
    [[nodiscard]] double fde_delta() const { return fde_factual ? *fde_counterfactual - *fde_factual : 0.0; }
};

DivergenceReport divergence(const PredictionSet& factual, const PredictionSet& counterfactual,
                            const Path* truth = nullptr);

InterventionSpec spec_from_json(const Json& j);
Json to_json(const InterventionSpec& spec);
Json to_json(const DivergenceReport& report);

struct ScenarioEntry {
    std::size_t sample = 0;
    std::vector<InterventionSpec> specs;
};

/// `[{"sample": 3, "specs": [{"kind": "zero_s"}, ...]}, ...]`; a single "spec" object is
/// accepted in place of "specs".
std::vector<ScenarioEntry> scenario_from_json(const Json& j);

}  // namespace scplus
