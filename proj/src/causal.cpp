#include "scplus/causal.hpp"

#include <algorithm>
#include <cmath>

#include "scplus/error.hpp"
#include "scplus/eval.hpp"

namespace scplus {

Path manual_neighbor_linear(const Vec2& p0, const Vec2& p_end, int t_h) {
    if (t_h < 1) throw ConfigError("manual neighbor needs t_h >= 1");
    const Vec2 step = (p_end - p0) / static_cast<double>(t_h);
    Path out;
    out.reserve(static_cast<std::size_t>(t_h) + 1);
    for (int t = 0; t <= t_h; ++t) out.push_back(p0 + step * static_cast<double>(t));
    return out;
}

Vec2 manual_neighbor_dv(const Vec2& p0, const Vec2& v0, const Vec2& p_end, int t_h) {
    if (t_h < 1) throw ConfigError("manual neighbor needs t_h >= 1");
    const double th = t_h;
    return 2.0 * (p_end - p0 - v0 * th) / (th * (th + 1.0));
}

Path manual_neighbor_nonlinear(const Vec2& p0, const Vec2& v0, const Vec2& p_end, int t_h) {
    const Vec2 dv = manual_neighbor_dv(p0, v0, p_end, t_h);
    Path out;
    out.reserve(static_cast<std::size_t>(t_h) + 1);
    for (int t = 0; t <= t_h; ++t) {
        const double td = t;
        out.push_back(p0 + v0 * td + dv * (td * (td + 1.0) / 2.0));
    }
    return out;
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string kind_name(const InterventionSpec& spec) {
    return std::visit(overloaded{
                          [](const ZeroS&) { return std::string("zero_s"); },
                          [](const ZeroP&) { return std::string("zero_p"); },
                          [](const FixS&) { return std::string("fix_s"); },
                          [](const FixP&) { return std::string("fix_p"); },
                          [](const ManualNeighborSpec&) { return std::string("manual_neighbor"); },
                          [](const PhysicalBox&) { return std::string("physical_box"); },
                      },
                      spec);
}

void validate_spec(const InterventionSpec& spec, const ModelConfig& config) {
    const std::string kind = kind_name(spec);
    auto need_physical = [&] {
        if (!config.uses_physical())
            throw ConfigError(kind + " requires a social_plus model (model variant is " +
                              std::string(to_string(config.variant)) + ")");
    };
    auto check_shape = [&](const Features& f) {
        if (f.rows() != config.circle.n_theta || f.cols() != config.d_sc)
            throw ConfigError(kind + ".value must be " + std::to_string(config.circle.n_theta) + " x " +
                              std::to_string(config.d_sc));
    };
    std::visit(overloaded{
                   [](const ZeroS&) {},
                   [&](const ZeroP&) { need_physical(); },
                   [&](const FixS& s) {
                       if (!config.uses_social()) throw ConfigError("fix_s requires a model with a social branch");
                       check_shape(s.value);
                   },
                   [&](const FixP& s) {
                       need_physical();
                       check_shape(s.value);
                   },
                   [&](const ManualNeighborSpec& s) {
                       if (s.mode == InterpolationMode::nonlinear && !s.v0)
                           throw ConfigError("manual_neighbor.v0 is required in nonlinear mode");
                   },
                   [&](const PhysicalBox& b) {
                       need_physical();
                       if (!(b.box.min.array() <= b.box.max.array()).all())
                           throw ConfigError("physical_box.min must not exceed physical_box.max");
                       if (!(b.box.label >= 0.0 && b.box.label <= 1.0))
                           throw ConfigError("physical_box.label must lie in [0, 1]");
                   },
               },
               spec);
}

Path manual_neighbor_track(const ManualNeighborSpec& spec, int t_h) {
    Path full = spec.mode == InterpolationMode::linear
                    ? manual_neighbor_linear(spec.p0, spec.p_end, t_h)
                    : manual_neighbor_nonlinear(spec.p0, spec.v0.value_or(Vec2::Zero()), spec.p_end, t_h);
    return Path(full.begin() + 1, full.end());
}

CounterfactualScene apply_interventions(const ModelConfig& config, const SceneCase& base,
                                        std::span<const InterventionSpec> specs) {
    CounterfactualScene cf{base, {}, {}};
    std::int64_t next_id = -1;
    std::shared_ptr<const SegmentationMap> map = base.map;
    for (const auto& spec : specs) {
        validate_spec(spec, config);
        std::visit(overloaded{
                       [&](const ZeroS&) { cf.overrides.f_s = Features::Zero(config.circle.n_theta, config.d_sc); },
                       [&](const ZeroP&) { cf.overrides.f_p = Features::Zero(config.circle.n_theta, config.d_sc); },
                       [&](const FixS& s) { cf.overrides.f_s = s.value; },
                       [&](const FixP& s) { cf.overrides.f_p = s.value; },
                       [&](const ManualNeighborSpec& s) {
                           Neighbor nb{next_id--, manual_neighbor_track(s, config.sample.t_h)};
                           cf.manual_neighbors.push_back(nb.observed);
                           cf.scene.sample.neighbors.push_back(std::move(nb));
                       },
                       [&](const PhysicalBox& b) {
                           if (!map) throw ConfigError("physical_box needs a scene with a segmentation map");
                           map = std::make_shared<const SegmentationMap>(apply_box(*map, b.box).map);
                       },
                   },
                   spec);
    }
    cf.scene.map = map;
    return cf;
}

InterventionOutcome intervene(const PredictorParams& params, const SceneCase& scene,
                              std::span<const InterventionSpec> specs, int k, std::uint64_t seed) {
    const auto& cfg = params.config;
    InterventionOutcome out;
    out.edited = apply_interventions(cfg, scene, specs);
    out.factual_inputs = prepare_inputs(cfg, scene);
    out.factual = predict_k(params, out.factual_inputs, k, seed);
    out.counterfactual_inputs = prepare_inputs(cfg, out.edited.scene);
    out.counterfactual = predict_k(params, out.counterfactual_inputs, k, seed, out.edited.overrides);
    return out;
}

DivergenceReport divergence(const PredictionSet& factual, const PredictionSet& counterfactual, const Path* truth) {
    if (factual.size() != counterfactual.size() || factual.size() == 0)
        throw ShapeError("factual and counterfactual sets must have the same nonzero size");
    DivergenceReport r;
    std::size_t n = 0;
    for (std::size_t k = 0; k < factual.size(); ++k) {
        const auto& a = factual.trajectories[k];
        const auto& b = counterfactual.trajectories[k];
        if (a.size() != b.size()) throw ShapeError("matched trajectories differ in length");
        for (std::size_t t = 0; t < a.size(); ++t) {
            const double d = (a[t] - b[t]).norm();
            r.mean_displacement += d;
            r.max_displacement = std::max(r.max_displacement, d);
            ++n;
        }
    }
    if (n > 0) r.mean_displacement /= static_cast<double>(n);
    if (truth) {
        r.ade_factual = min_ade(factual, *truth);
        r.ade_counterfactual = min_ade(counterfactual, *truth);
        r.fde_factual = min_fde(factual, *truth);
        r.fde_counterfactual = min_fde(counterfactual, *truth);
    }
    return r;
}

// ---------------------------------------------------------------------------------

namespace {

const Json& field(const Json& j, const char* name, const std::string& kind) {
    if (!j.contains(name)) throw ConfigError(kind + "." + name + " is required");
    return j.at(name);
}

Vec2 vec_field(const Json& j, const char* name, const std::string& kind) {
    const Json& v = field(j, name, kind);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(kind + "." + name + " must be a [x, y] number pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

Features features_field(const Json& j, const std::string& kind) {
    const Json& v = field(j, "value", kind);
    if (!v.is_array() || v.empty() || !v[0].is_array()) throw ConfigError(kind + ".value must be a 2-D number array");
    Features f(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v[0].size()));
    for (std::size_t r = 0; r < v.size(); ++r) {
        if (!v[r].is_array() || v[r].size() != v[0].size())
            throw ConfigError(kind + ".value rows must all have the same length");
        for (std::size_t c = 0; c < v[r].size(); ++c) {
            if (!v[r][c].is_number()) throw ConfigError(kind + ".value must contain numbers only");
            f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
        }
    }
    return f;
}

Json features_json(const Features& f) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < f.cols(); ++c) row.push_back(f(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

InterventionSpec spec_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("intervention spec must be a JSON object");
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("kind is required");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero_s") return ZeroS{};
    if (kind == "zero_p") return ZeroP{};
    if (kind == "fix_s") return FixS{features_field(j, kind)};
    if (kind == "fix_p") return FixP{features_field(j, kind)};
    if (kind == "manual_neighbor") {
        ManualNeighborSpec s;
        const std::string mode = j.value("mode", std::string("linear"));
        if (mode == "linear")
            s.mode = InterpolationMode::linear;
        else if (mode == "nonlinear")
            s.mode = InterpolationMode::nonlinear;
        else
            throw ConfigError("manual_neighbor.mode must be 'linear' or 'nonlinear'");
        s.p0 = vec_field(j, "p0", kind);
        s.p_end = vec_field(j, "p_end", kind);
        if (j.contains("v0")) s.v0 = vec_field(j, "v0", kind);
        if (s.mode == InterpolationMode::nonlinear && !s.v0)
            throw ConfigError("manual_neighbor.v0 is required in nonlinear mode");
        return s;
    }
    if (kind == "physical_box") {
        PhysicalBox b;
        b.box.min = vec_field(j, "min", kind);
        b.box.max = vec_field(j, "max", kind);
        const Json& label = field(j, "label", kind);
        if (!label.is_number()) throw ConfigError("physical_box.label must be a number");
        b.box.label = label.get<double>();
        if (!(b.box.min.array() <= b.box.max.array()).all())
            throw ConfigError("physical_box.min must not exceed physical_box.max");
        if (!(b.box.label >= 0.0 && b.box.label <= 1.0)) throw ConfigError("physical_box.label must lie in [0, 1]");
        return b;
    }
    throw ConfigError("kind '" + kind + "' is not a known intervention");
}

Json to_json(const InterventionSpec& spec) {
    Json j;
    j["kind"] = kind_name(spec);
    std::visit(overloaded{
                   [](const ZeroS&) {},
                   [](const ZeroP&) {},
                   [&](const FixS& s) { j["value"] = features_json(s.value); },
                   [&](const FixP& s) { j["value"] = features_json(s.value); },
                   [&](const ManualNeighborSpec& s) {
                       j["mode"] = s.mode == InterpolationMode::linear ? "linear" : "nonlinear";
                       j["p0"] = to_json(s.p0);
                       j["p_end"] = to_json(s.p_end);
                       if (s.v0) j["v0"] = to_json(*s.v0);
                   },
                   [&](const PhysicalBox& b) {
                       j["min"] = to_json(b.box.min);
                       j["max"] = to_json(b.box.max);
                       j["label"] = b.box.label;
                   },
               },
               spec);
    return j;
}

Json to_json(const DivergenceReport& r) {
    Json j{{"mean_displacement", r.mean_displacement}, {"max_displacement", r.max_displacement}};
    if (r.ade_factual) {
        j["ade_factual"] = *r.ade_factual;
        j["ade_counterfactual"] = *r.ade_counterfactual;
        j["fde_factual"] = *r.fde_factual;
        j["fde_counterfactual"] = *r.fde_counterfactual;
        j["ade_delta"] = r.ade_delta();
        j["fde_delta"] = r.fde_delta();
    }
    return j;
}

std::vector<ScenarioEntry> scenario_from_json(const Json& j) {
    if (!j.is_array()) throw ConfigError("scenario file must hold a JSON array");
    std::vector<ScenarioEntry> out;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("sample") || !e.at("sample").is_number_unsigned())
            throw ConfigError("scenario entries need a nonnegative integer 'sample'");
        ScenarioEntry entry{e.at("sample").get<std::size_t>(), {}};
        if (e.contains("specs")) {
            for (const auto& s : e.at("specs")) entry.specs.push_back(spec_from_json(s));
        } else if (e.contains("spec")) {
            entry.specs.push_back(spec_from_json(e.at("spec")));
        } else {
            throw ConfigError("scenario entries need 'spec' or 'specs'");
        }
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace scplus
