#include "scplus/json_io.hpp"

#include "scplus/error.hpp"

namespace scplus {

Json to_json(const Vec2& p) { return Json::array({p.x(), p.y()}); }

Vec2 vec2_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw ShapeError("expected a 2-element position array");
    return {j[0].get<double>(), j[1].get<double>()};
}

Json to_json(const Path& path) {
    Json out = Json::array();
    for (const auto& p : path) out.push_back(to_json(p));
    return out;
}

Path path_from_json(const Json& j) {
    if (!j.is_array()) throw ShapeError("expected an array of positions");
    Path out;
    for (const auto& p : j) out.push_back(vec2_from_json(p));
    return out;
}

Json to_json(const ModelConfig& c) {
    return {
        {"t_h", c.sample.t_h},
        {"t_f", c.sample.t_f},
        {"dt", c.sample.dt},
        {"n_theta", c.circle.n_theta},
        {"r_min", c.circle.r_min},
        {"n_ray", c.circle.n_ray},
        {"n_rad", c.circle.n_rad},
        {"k_neighbors", c.circle.k_neighbors},
        {"d", c.d},
        {"d_sc", c.d_sc},
        {"k_gen", c.k_gen},
        {"noise_dim", c.noise_dim},
        {"layers", c.layers},
        {"variant", std::string(to_string(c.variant))},
        {"fusion", std::string(to_string(c.fusion))},
        {"meta_mask", {c.meta_mask[0], c.meta_mask[1], c.meta_mask[2]}},
        {"padded_backbone", c.padded_backbone},
        {"coord_scale", c.coord_scale},
    };
}

ModelConfig model_config_from_json(const Json& j) {
    ModelConfig c;
    c.sample.t_h = j.at("t_h").get<int>();
    c.sample.t_f = j.at("t_f").get<int>();
    c.sample.dt = j.at("dt").get<double>();
    c.circle.n_theta = j.at("n_theta").get<int>();
    c.circle.r_min = j.at("r_min").get<double>();
    c.circle.n_ray = j.at("n_ray").get<int>();
    c.circle.n_rad = j.at("n_rad").get<int>();
    c.circle.k_neighbors = j.at("k_neighbors").get<std::size_t>();
    c.d = j.at("d").get<int>();
    c.d_sc = j.at("d_sc").get<int>();
    c.k_gen = j.at("k_gen").get<int>();
    c.noise_dim = j.at("noise_dim").get<int>();
    c.layers = j.at("layers").get<int>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.fusion = parse_fusion_mode(j.at("fusion").get<std::string>());
    const auto& m = j.at("meta_mask");
    for (std::size_t i = 0; i < 3; ++i) c.meta_mask[i] = m.at(i).get<bool>();
    c.padded_backbone = j.at("padded_backbone").get<bool>();
    c.coord_scale = j.at("coord_scale").get<double>();
    c.validate();
    return c;
}

Json to_json(const PredictionSet& set) {
    Json out = Json::array();
    for (const auto& t : set.trajectories) out.push_back(to_json(t));
    return out;
}

namespace {
Json rows_json(const CircleRep& rep) {
    Json rows = Json::array();
    for (std::size_t j = 0; j < rep.size(); ++j)
        rows.push_back({{"values", {rep.rows[j][0], rep.rows[j][1], rep.rows[j][2]}}, {"occupied", bool(rep.occupied[j])}});
    return rows;
}
}  // namespace

Json to_json(const SocialCircleRep& rep) {
    Json out = {{"components", {"velocity", "distance", "direction"}}, {"rows", rows_json(rep)}};
    out["counts"] = rep.counts;
    return out;
}

Json to_json(const PhysicalCircleRep& rep) {
    return {{"components", {"obstruction", "clearance", "bearing"}}, {"rows", rows_json(rep)}, {"radius", rep.radius}};
}

Json to_json(const AffineCalib& calib) {
    return {{"w_x", calib.w.x()}, {"w_y", calib.w.y()}, {"b_x", calib.b.x()}, {"b_y", calib.b.y()}};
}

Json to_json(const ParamCount& count) {
    Json out;
    for (std::size_t i = 0; i < kParamGroups.size(); ++i) out[std::string(kParamGroups[i])] = count.groups[i];
    out["total"] = count.total;
    return out;
}

}  // namespace scplus
