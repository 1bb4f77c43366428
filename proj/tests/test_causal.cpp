#include "doctest.h"
#include "scplus/causal.hpp"
#include "scplus/error.hpp"
#include "support.hpp"

using namespace scplus;
using scplus::testing::random_params;
using scplus::testing::random_scene;
using scplus::testing::small_config;

TEST_CASE("manual neighbor formulas") {
    Rng rng(10);
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_int_distribution<int> th(1, 20);
    SUBCASE("hand example") {
        const auto lin = manual_neighbor_linear(Vec2(0, 0), Vec2(8, 4), 8);
        REQUIRE(lin.size() == 9);
        CHECK(lin[3] == Vec2(3, 1.5));
        // v0 = (1, 0), p_end = (10, 0), t_h = 4: dv = 2 * (6, 0) / 20 = (0.6, 0)
        CHECK((manual_neighbor_dv(Vec2(0, 0), Vec2(1, 0), Vec2(10, 0), 4) - Vec2(0.6, 0)).norm() < 1e-15);
        const auto nl = manual_neighbor_nonlinear(Vec2(0, 0), Vec2(1, 0), Vec2(10, 0), 4);
        CHECK((nl[1] - Vec2(1.6, 0)).norm() < 1e-15);
        CHECK((nl[2] - Vec2(3.8, 0)).norm() < 1e-15);
    }
    SUBCASE("boundary conditions and the velocity sum") {
        for (int trial = 0; trial < 1000; ++trial) {
            const Vec2 p0(u(rng), u(rng)), p_end(u(rng), u(rng)), v0(u(rng) / 4, u(rng) / 4);
            const int t_h = th(rng);
            const auto lin = manual_neighbor_linear(p0, p_end, t_h);
            const auto nl = manual_neighbor_nonlinear(p0, v0, p_end, t_h);
            CHECK(lin.front() == p0);
            CHECK((lin.back() - p_end).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(nl.front() == p0);
            CHECK((nl.back() - p_end).cwiseAbs().maxCoeff() <= 1e-12);
            const Vec2 dv = manual_neighbor_dv(p0, v0, p_end, t_h);
            Vec2 sum = Vec2::Zero();
            for (int t = 1; t <= t_h; ++t) sum += v0 + t * dv;
            CHECK((sum - (p_end - p0)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("zero velocity increment collapses to linear") {
        for (int trial = 0; trial < 1000; ++trial) {
            const Vec2 p0(u(rng), u(rng)), p_end(u(rng), u(rng));
            const Vec2 v0 = (p_end - p0) / 8.0;
            CHECK(manual_neighbor_dv(p0, v0, p_end, 8) == Vec2::Zero());
            CHECK(manual_neighbor_nonlinear(p0, v0, p_end, 8) == manual_neighbor_linear(p0, p_end, 8));
        }
    }
    SUBCASE("track drops the start point") {
        const ManualNeighborSpec s{InterpolationMode::linear, Vec2(0, 0), Vec2(8, 8), std::nullopt};
        const auto track = manual_neighbor_track(s, 8);
        REQUIRE(track.size() == 8);
        CHECK(track.front() == Vec2(1, 1));
        CHECK(track.back() == Vec2(8, 8));
    }
    CHECK_THROWS_AS(manual_neighbor_linear(Vec2(0, 0), Vec2(1, 1), 0), ConfigError);
}

TEST_CASE("spec validation") {
    const auto none = small_config(Variant::none, FusionMode::hard);
    const auto social = small_config(Variant::social, FusionMode::hard);
    const auto plus = small_config(Variant::social_plus, FusionMode::adaptive);
    CHECK_NOTHROW(validate_spec(ZeroS{}, none));
    CHECK_THROWS_AS(validate_spec(ZeroP{}, social), ConfigError);
    CHECK_NOTHROW(validate_spec(ZeroP{}, plus));
    CHECK_THROWS_AS(validate_spec(FixS{Features::Zero(8, 4)}, none), ConfigError);
    CHECK_THROWS_AS(validate_spec(FixS{Features::Zero(8, 3)}, social), ConfigError);
    CHECK_NOTHROW(validate_spec(FixP{Features::Zero(8, 4)}, plus));
    CHECK_THROWS_AS(validate_spec(PhysicalBox{{Vec2(0, 0), Vec2(1, 1), 1.0}}, social), ConfigError);
    CHECK_THROWS_AS(validate_spec(PhysicalBox{{Vec2(2, 0), Vec2(1, 1), 1.0}}, plus), ConfigError);
    CHECK_THROWS_AS(validate_spec(PhysicalBox{{Vec2(0, 0), Vec2(1, 1), 1.5}}, plus), ConfigError);
    CHECK_THROWS_AS(validate_spec(ManualNeighborSpec{InterpolationMode::nonlinear, {}, {}, std::nullopt}, plus),
                    ConfigError);
}

TEST_CASE("interventions") {
    const auto cfg = small_config(Variant::social_plus, FusionMode::adaptive);
    Rng rng(14);
    const auto params = random_params(cfg, rng);
    const auto scene = random_scene(rng, cfg.sample, 3);
    const auto base_map = *scene.map;

    SUBCASE("the base scene is never modified") {
        const std::vector<InterventionSpec> specs{
            ManualNeighborSpec{InterpolationMode::linear, Vec2(-3, 1), Vec2(1, 1), std::nullopt},
            PhysicalBox{{Vec2(0, 0), Vec2(500, 500), 1.0}}, ZeroS{}};
        const auto cf = apply_interventions(cfg, scene, specs);
        CHECK(scene.sample.neighbors.size() == 3);
        CHECK(*scene.map == base_map);
        REQUIRE(cf.scene.sample.neighbors.size() == 4);
        CHECK(cf.scene.sample.neighbors.back().agent_id == -1);
        CHECK(cf.scene.sample.neighbors.back().observed.back() == Vec2(1, 1));
        for (double v : cf.scene.map->values) CHECK(v == 1.0);
        CHECK(cf.overrides.f_s->isZero(0));
        CHECK_FALSE(cf.overrides.f_p.has_value());
    }
    SUBCASE("fixing S to its factual value reproduces the factual predictions") {
        const auto in = prepare_inputs(cfg, scene);
        const auto st = encode_state(params, in);
        const auto out = intervene(params, scene, FixS{st.f_s}, 20, 99);
        CHECK(out.counterfactual == out.factual);
        CHECK(divergence(out.factual, out.counterfactual).max_displacement == 0.0);
    }
    SUBCASE("zero interventions recompute everything downstream") {
        const auto out = intervene(params, scene, ZeroS{}, 20, 99);
        RepOverrides ov;
        ov.f_s = Features::Zero(8, 4);
        CHECK(out.counterfactual == predict_k(params, prepare_inputs(cfg, scene), 20, 99, ov));
        CHECK(divergence(out.factual, out.counterfactual).mean_displacement > 0.0);
        CHECK(out.factual == predict_k(params, prepare_inputs(cfg, scene), 20, 99));
    }
    SUBCASE("repainting the existing labels is a no-op") {
        const auto out = intervene(params, scene, PhysicalBox{{Vec2(0, 0), Vec2(30, 30), 0.0}}, 20, 5);
        // The box only covers free cells of this map when it lies away from the blocks.
        bool free = true;
        for (int r = 0; r < 30; ++r)
            for (int c = 0; c < 30; ++c) free = free && base_map.at(r, c) == 0.0;
        REQUIRE(free);
        CHECK(out.counterfactual == out.factual);
    }
    SUBCASE("a later override wins") {
        const std::vector<InterventionSpec> specs{ZeroP{}, FixP{Features::Constant(8, 4, 0.5)}};
        const auto cf = apply_interventions(cfg, scene, specs);
        CHECK((*cf.overrides.f_p)(0, 0) == 0.5);
    }
    SUBCASE("boxes need a map") {
        SceneCase bare = scene;
        bare.map.reset();
        CHECK_THROWS_AS(intervene(params, bare, PhysicalBox{{Vec2(0, 0), Vec2(1, 1), 1.0}}, 5, 1), ConfigError);
    }
}

TEST_CASE("isolated scenes are insensitive to zeroing S and P") {
    const auto cfg = small_config(Variant::social_plus, FusionMode::adaptive);
    Rng rng(2);
    const auto params = random_params(cfg, rng);
    SceneCase scene = random_scene(rng, cfg.sample, 0);
    scene.map = std::make_shared<SegmentationMap>(100, 100, 0.0);
    for (const InterventionSpec& s : {InterventionSpec{ZeroS{}}, InterventionSpec{ZeroP{}}}) {
        const auto out = intervene(params, scene, s, 20, 3);
        const auto d = divergence(out.factual, out.counterfactual, &scene.sample.future);
        CHECK(d.max_displacement == 0.0);
        CHECK(d.ade_delta() == 0.0);
    }
    // A model without a social branch ignores do(S = 0) entirely.
    const auto none_cfg = small_config(Variant::none, FusionMode::hard);
    const auto none = random_params(none_cfg, rng);
    const auto full = random_scene(rng, none_cfg.sample, 4);
    const auto out = intervene(none, full, ZeroS{}, 20, 3);
    CHECK(out.counterfactual == out.factual);
}

TEST_CASE("divergence report") {
    const PredictionSet a{{{Vec2(0, 0), Vec2(1, 0)}, {Vec2(0, 0), Vec2(0, 0)}}};
    const PredictionSet b{{{Vec2(0, 3), Vec2(1, 0)}, {Vec2(0, 0), Vec2(0, 4)}}};
    const Path truth{Vec2(0, 0), Vec2(1, 0)};
    const auto d = divergence(a, b, &truth);
    CHECK(d.mean_displacement == 7.0 / 4.0);
    CHECK(d.max_displacement == 4.0);
    CHECK(*d.ade_factual == 0.0);
    CHECK(d.ade_delta() == doctest::Approx(1.5));
    CHECK(d.fde_delta() == 0.0);
    CHECK(to_json(d)["ade_delta"].get<double>() == doctest::Approx(1.5));
    CHECK_THROWS_AS(divergence(a, PredictionSet{}), ShapeError);
}

TEST_CASE("spec JSON") {
    const std::vector<InterventionSpec> specs{
        ZeroS{}, ZeroP{}, FixS{Features::Constant(2, 3, 0.25)},
        ManualNeighborSpec{InterpolationMode::nonlinear, Vec2(1, 2), Vec2(3, 4), Vec2(0.5, 0)},
        PhysicalBox{{Vec2(0, 0), Vec2(10, 20), 0.5}}};
    for (const auto& s : specs) {
        const Json j = to_json(s);
        CHECK(to_json(spec_from_json(j)) == j);
    }
    CHECK(std::get<FixS>(spec_from_json(to_json(specs[2]))).value == Features::Constant(2, 3, 0.25));

    auto message = [](const char* text) {
        try {
            (void)spec_from_json(Json::parse(text));
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"({"kind": "zero_x"})").find("zero_x") != std::string::npos);
    CHECK(message(R"({"kind": "manual_neighbor", "p0": [0, 0]})").find("manual_neighbor.p_end") != std::string::npos);
    CHECK(message(R"({"kind": "manual_neighbor", "p0": [0], "p_end": [1, 1]})").find("manual_neighbor.p0") !=
          std::string::npos);
    CHECK(message(R"({"kind": "physical_box", "min": [0, 0], "max": [1, 1], "label": 2})").find("label") !=
          std::string::npos);
    CHECK(message(R"([1, 2])").find("object") != std::string::npos);

    const auto scenario = scenario_from_json(Json::parse(
        R"([{"sample": 2, "specs": [{"kind": "zero_s"}, {"kind": "zero_p"}]}, {"sample": 0, "spec": {"kind": "zero_s"}}])"));
    REQUIRE(scenario.size() == 2);
    CHECK(scenario[0].sample == 2);
    CHECK(scenario[0].specs.size() == 2);
    CHECK(scenario[1].specs.size() == 1);
    CHECK_THROWS_AS(scenario_from_json(Json::parse(R"([{"sample": 1}])")), ConfigError);
}
