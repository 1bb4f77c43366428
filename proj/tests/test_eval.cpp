#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "scplus/error.hpp"
#include "scplus/eval.hpp"
#include "support.hpp"

using namespace scplus;
using scplus::testing::random_params;
using scplus::testing::random_scene;
using scplus::testing::small_config;

TEST_CASE("best-of-k metrics") {
    const Path truth{Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)};
    SUBCASE("exact prediction scores zero") {
        PredictionSet set{{truth}};
        CHECK(min_ade(set, truth) == 0.0);
        CHECK(min_fde(set, truth) == 0.0);
    }
    SUBCASE("hand example") {
        // Offsets (0,3) everywhere; second path 4 away only at the end.
        PredictionSet set{{{Vec2(0, 3), Vec2(1, 3), Vec2(2, 3)}, {Vec2(0, 0), Vec2(1, 0), Vec2(2, 4)}}};
        CHECK(min_ade(set, truth) == doctest::Approx(4.0 / 3.0));
        CHECK(min_fde(set, truth) == 3.0);
    }
    SUBCASE("brute-force enumeration over k") {
        Rng rng(1);
        std::normal_distribution<double> n(0.0, 2.0);
        std::uniform_int_distribution<int> kk(1, 30);
        for (int trial = 0; trial < 300; ++trial) {
            Path gt;
            for (int t = 0; t < 12; ++t) gt.push_back(Vec2(n(rng), n(rng)));
            PredictionSet set;
            const int k = kk(rng);
            for (int i = 0; i < k; ++i) {
                Path p;
                for (int t = 0; t < 12; ++t) p.push_back(Vec2(n(rng), n(rng)));
                set.trajectories.push_back(p);
            }
            std::vector<double> ades, fdes;
            for (const auto& p : set.trajectories) {
                double s = 0;
                for (int t = 0; t < 12; ++t) s += std::hypot(p[t].x() - gt[t].x(), p[t].y() - gt[t].y());
                ades.push_back(s / 12);
                fdes.push_back(std::hypot(p[11].x() - gt[11].x(), p[11].y() - gt[11].y()));
            }
            CHECK(std::abs(min_ade(set, gt) - *std::min_element(ades.begin(), ades.end())) <= 1e-12);
            CHECK(std::abs(min_fde(set, gt) - *std::min_element(fdes.begin(), fdes.end())) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(min_ade(PredictionSet{}, truth), ShapeError);
    CHECK_THROWS_AS(min_fde(PredictionSet{{Path{Vec2(0, 0)}}}, truth), ShapeError);
}

TEST_CASE("dataset evaluation") {
    const ModelConfig cfg = small_config(Variant::social_plus, FusionMode::adaptive);
    Rng rng(3);
    const auto params = random_params(cfg, rng);
    std::vector<SceneCase> scenes;
    for (int i = 0; i < 6; ++i) scenes.push_back(random_scene(rng, cfg.sample, 3));
    const auto base = evaluate(params, std::span<const SceneCase>(scenes), 20, 11);
    REQUIRE(base.per_sample_ade.size() == 6);

    SUBCASE("per-sample values follow the keyed noise stream") {
        const auto prepared = prepare_cases(cfg, scenes);
        for (std::size_t i = 0; i < 6; ++i) {
            const auto set = predict_k(params, prepared[i].inputs, 20, sample_noise_seed(11, prepared[i].key));
            CHECK(base.per_sample_ade[i] == min_ade(set, scenes[i].sample.future));
            CHECK(base.per_sample_fde[i] == min_fde(set, scenes[i].sample.future));
        }
    }
    SUBCASE("duplicating the dataset leaves the means unchanged") {
        auto twice = scenes;
        twice.insert(twice.end(), scenes.begin(), scenes.end());
        const auto r = evaluate(params, std::span<const SceneCase>(twice), 20, 11);
        CHECK(r.ade == doctest::Approx(base.ade).epsilon(1e-14));
        CHECK(r.fde == doctest::Approx(base.fde).epsilon(1e-14));
    }
    SUBCASE("reordering permutes per-sample values") {
        auto rev = scenes;
        std::reverse(rev.begin(), rev.end());
        const auto r = evaluate(params, std::span<const SceneCase>(rev), 20, 11);
        for (std::size_t i = 0; i < 6; ++i) CHECK(r.per_sample_ade[i] == base.per_sample_ade[5 - i]);
    }
    CHECK_THROWS_AS(evaluate(params, std::span<const SceneCase>(), 20, 1), ConfigError);
}

TEST_CASE("ablation harness") {
    Rng rng(8);
    std::vector<SceneCase> train_data, test_data;
    const SampleSpec spec;
    for (int i = 0; i < 16; ++i) train_data.push_back(random_scene(rng, spec, 2));
    for (int i = 0; i < 4; ++i) test_data.push_back(random_scene(rng, spec, 2));

    AblationSetup setup;
    setup.base = small_config(Variant::social_plus, FusionMode::adaptive);
    setup.train.epochs = 3;
    setup.train.lr = 0.01;
    setup.train.batch_size = 8;
    setup.seeds = {1, 2};
    setup.eval_k = 5;
    const std::vector<AblationCombo> grid{{"none", Variant::none, FusionMode::hard, {true, true, true}, 8},
                                          {"hard", Variant::social_plus, FusionMode::hard, {true, true, true}, 8},
                                          {"vd", Variant::social, FusionMode::hard, {true, true, false}, 4}};
    const auto rows = run_ablation(grid, train_data, test_data, setup);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].delta_ade_pct == 0.0);
    for (const auto& r : rows) {
        REQUIRE(r.per_seed.size() == 2);
        CHECK(r.mean_ade == doctest::Approx((r.per_seed[0].ade + r.per_seed[1].ade) / 2));
        CHECK(r.delta_ade_pct == doctest::Approx((r.mean_ade - rows[0].mean_ade) / rows[0].mean_ade * 100));
    }
    CHECK(rows[2].per_seed[0].config.meta_mask == std::array<bool, 3>{true, true, false});
    CHECK(rows[2].per_seed[0].config.circle.n_theta == 4);

    std::ostringstream csv, md;
    write_ablation_csv(csv, rows);
    write_ablation_markdown(md, rows);
    const std::string text = csv.str();
    CHECK(text.rfind("label,variant,fusion,meta_mask,n_theta", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(md.str().find("| vd | social | hard | 110 | 4 |") != std::string::npos);

    setup.seeds.clear();
    CHECK_THROWS_AS(run_ablation(grid, train_data, test_data, setup), ConfigError);
}

TEST_CASE("meta masks") {
    CHECK(mask_string({true, false, true}) == "101");
    CHECK(parse_mask("011") == std::array<bool, 3>{false, true, true});
    CHECK_THROWS_AS(parse_mask("12"), ConfigError);
    CHECK_THROWS_AS(parse_mask("1010"), ConfigError);
}
