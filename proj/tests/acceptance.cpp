// Acceptance checks: one PASS/FAIL line per criterion; exit code 1 if any unexpected failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Geometry>

#include "scplus/causal.hpp"
#include "scplus/eval.hpp"
#include "scplus/pipeline.hpp"
#include "support.hpp"

using namespace scplus;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1 ------------------------------------------------------------------------------

Outcome metric_oracle() {
    Rng rng(101);
    std::normal_distribution<double> n(0.0, 3.0);
    std::uniform_int_distribution<int> kk(1, 40), tf(1, 20);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = kk(rng), t_f = tf(rng);
        Path truth;
        for (int t = 0; t < t_f; ++t) truth.push_back(Vec2(n(rng), n(rng)));
        PredictionSet set;
        for (int i = 0; i < k; ++i) {
            Path p;
            for (int t = 0; t < t_f; ++t) p.push_back(Vec2(n(rng), n(rng)));
            set.trajectories.push_back(p);
        }
        double best_ade = INFINITY, best_fde = INFINITY;
        for (const auto& p : set.trajectories) {
            double s = 0;
            for (int t = 0; t < t_f; ++t) s += std::hypot(p[t].x() - truth[t].x(), p[t].y() - truth[t].y());
            best_ade = std::min(best_ade, s / t_f);
            best_fde = std::min(best_fde, std::hypot(p.back().x() - truth.back().x(), p.back().y() - truth.back().y()));
        }
        worst = std::max({worst, std::abs(min_ade(set, truth) - best_ade), std::abs(min_fde(set, truth) - best_fde)});
    }
    return {worst <= 1e-12, fmt("max |metric - brute force| = %.2e over 1000 instances", worst)};
}

// 2 ------------------------------------------------------------------------------

Outcome calibration_recovery() {
    Rng rng(202);
    std::uniform_real_distribution<double> pos(-30, 30), w(0.5, 20), b(-50, 50);
    double worst = 0.0;
    auto recover = [&](const AffineCalib& truth) {
        std::vector<CalibPair> pairs;
        for (int i = 0; i < 12; ++i) {
            const Vec2 s(pos(rng), pos(rng));
            pairs.push_back({s, truth.to_pixel(s)});
        }
        const auto fit = fit_calibration(pairs);
        worst = std::max({worst, (fit.calib.w - truth.w).cwiseAbs().maxCoeff(),
                          (fit.calib.b - truth.b).cwiseAbs().maxCoeff()});
    };
    AffineCalib court;
    court.w = Vec2(10, 10);
    recover(court);
    const double court_err = worst;
    for (int i = 0; i < 100; ++i) {
        AffineCalib c;
        c.w = Vec2(w(rng) * (rng() % 2 ? 1 : -1), w(rng));
        c.b = Vec2(b(rng), b(rng));
        recover(c);
    }

    // Noisy correspondences: no probe candidate may beat the least-squares residual.
    std::normal_distribution<double> noise(0.0, 0.8);
    std::vector<CalibPair> pairs;
    for (int i = 0; i < 40; ++i) {
        const Vec2 s(pos(rng), pos(rng));
        pairs.push_back({s, Vec2(9 * s.x() + 4, 11 * s.y() - 2) + Vec2(noise(rng), noise(rng))});
    }
    const auto fit = fit_calibration(pairs);
    auto rms = [&](const AffineCalib& c) {
        double s = 0;
        for (const auto& p : pairs) s += (c.to_pixel(p.scene) - p.pixel).squaredNorm();
        return std::sqrt(s / static_cast<double>(pairs.size()));
    };
    int beaten = 0;
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double scale = std::pow(10.0, -4.0 + 4.0 * (i % 100) / 99.0);
        AffineCalib c = fit.calib;
        c.w += scale * 0.1 * Vec2(jitter(rng), jitter(rng));
        c.b += scale * Vec2(jitter(rng), jitter(rng));
        if (rms(c) < fit.residual_rms) ++beaten;
    }
    const bool pass = court_err <= 1e-9 && worst <= 1e-9 && beaten == 0;
    return {pass, fmt("court error %.1e, worst of 100 random %.1e, probes beating the fit %d/1000", court_err, worst,
                      beaten)};
}

// 3 ------------------------------------------------------------------------------

Outcome gradient_checks() {
    using namespace scplus::testing;
    const std::array<std::pair<Variant, FusionMode>, 4> variants{{{Variant::none, FusionMode::hard},
                                                                  {Variant::social, FusionMode::hard},
                                                                  {Variant::social_plus, FusionMode::hard},
                                                                  {Variant::social_plus, FusionMode::adaptive}}};
    Rng rng(303);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto [v, f] = variants[static_cast<std::size_t>(i % 4)];
        ModelConfig cfg = small_config(v, f);
        cfg.layers = 1 + (i / 4) % 2;
        const auto params = random_params(cfg, rng);
        const auto scene = random_scene(rng, cfg.sample, 1 + i % 6);
        const auto in = prepare_inputs(cfg, scene);
        const BatchItem item{&in, &scene.sample.future,
                             separated_noise(params, in, scene.sample.future, cfg.k_gen, rng, 1e-3)};
        worst = std::max(worst, max_gradient_error(params, item));
    }
    return {worst < 1e-4, fmt("max relative error %.2e over 100 instances (4 variant/fusion settings)", worst)};
}

// 4 ------------------------------------------------------------------------------

Outcome circle_invariants() {
    Rng rng(404);
    std::uniform_int_distribution<int> q(-60000, 60000), nn(0, 12), shift(1, 7);
    auto dyadic = [&] { return std::ldexp(static_cast<double>(q(rng)), -12); };
    const CircleSpec spec;
    const double width = 2 * kPi / spec.n_theta;
    int translation_fail = 0, coverage_fail = 0, tested_rot = 0;
    double rot_err = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        TrajectorySample s;
        for (int t = 0; t < 8; ++t) s.observed.push_back(Vec2(dyadic(), dyadic()));
        const int n = nn(rng);
        for (int i = 0; i < n; ++i) {
            Neighbor nb{i, {}};
            for (int t = 0; t < 8; ++t) nb.observed.push_back(Vec2(dyadic(), dyadic()));
            s.neighbors.push_back(nb);
        }
        std::vector<std::size_t> ids(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        const auto a = social_circle(s, ids, spec);

        int total = 0;
        for (int c : a.counts) total += c;
        coverage_fail += total != n;

        auto moved = s;
        const Vec2 c(dyadic(), dyadic());
        for (auto& p : moved.observed) p += c;
        for (auto& nb : moved.neighbors)
            for (auto& p : nb.observed) p += c;
        const auto b = social_circle(moved, ids, spec);
        translation_fail += !(a.rows == b.rows && a.counts == b.counts);

        bool near_edge = false;
        for (const auto& nb : s.neighbors) {
            const Vec2 rel = nb.observed.back() - s.observed.back();
            const double ang = wrap_angle(std::atan2(rel.y(), rel.x())) / width;
            near_edge = near_edge || ang - std::floor(ang) < 1e-6 || ang - std::floor(ang) > 1 - 1e-6;
        }
        if (near_edge) continue;
        ++tested_rot;
        const int m = shift(rng);
        const Eigen::Rotation2Dd rot(m * width);
        auto turned = s;
        for (auto& p : turned.observed) p = rot * p;
        for (auto& nb : turned.neighbors)
            for (auto& p : nb.observed) p = rot * p;
        const auto r = social_circle(turned, ids, spec);
        for (std::size_t j = 0; j < a.size(); ++j) {
            const std::size_t k = (j + static_cast<std::size_t>(m)) % a.size();
            if (r.counts[k] != a.counts[j]) rot_err = INFINITY;
            rot_err = std::max({rot_err, std::abs(r.rows[k][0] - a.rows[j][0]), std::abs(r.rows[k][1] - a.rows[j][1])});
            if (a.occupied[j]) {
                const double d = std::fmod(std::abs(r.rows[k][2] - a.rows[j][2] - m * width) + 4 * kPi, 2 * kPi);
                rot_err = std::max(rot_err, std::min(d, 2 * kPi - d));
            }
        }
    }
    for (int j = 0; j < spec.n_theta; ++j) coverage_fail += partition_index(j * width + 1e-12, spec.n_theta) != j;
    const bool pass = translation_fail == 0 && coverage_fail == 0 && rot_err <= 1e-9 && tested_rot >= 400;
    return {pass, fmt("translation mismatches %d/500, rotation max error %.1e over %d samples, coverage errors %d",
                      translation_fail, rot_err, tested_rot, coverage_fail)};
}

// 5 ------------------------------------------------------------------------------

Outcome manual_neighbor_formulas() {
    Rng rng(505);
    std::uniform_real_distribution<double> u(-20, 20);
    std::uniform_int_distribution<int> th(1, 30);
    double boundary = 0.0, constraint = 0.0;
    int collapse_fail = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec2 p0(u(rng), u(rng)), p_end(u(rng), u(rng)), v0(u(rng) / 5, u(rng) / 5);
        const int t_h = th(rng);
        const auto lin = manual_neighbor_linear(p0, p_end, t_h);
        const auto nl = manual_neighbor_nonlinear(p0, v0, p_end, t_h);
        boundary = std::max({boundary, (lin.front() - p0).cwiseAbs().maxCoeff(), (lin.back() - p_end).cwiseAbs().maxCoeff(),
                             (nl.front() - p0).cwiseAbs().maxCoeff(), (nl.back() - p_end).cwiseAbs().maxCoeff()});
        const Vec2 dv = manual_neighbor_dv(p0, v0, p_end, t_h);
        Vec2 sum = Vec2::Zero();
        for (int t = 1; t <= t_h; ++t) sum += v0 + t * dv;
        constraint = std::max(constraint, (sum - (p_end - p0)).cwiseAbs().maxCoeff());

        const Vec2 v_lin = (p_end - p0) / 8.0;
        collapse_fail += !(manual_neighbor_dv(p0, v_lin, p_end, 8) == Vec2::Zero() &&
                           manual_neighbor_nonlinear(p0, v_lin, p_end, 8) == manual_neighbor_linear(p0, p_end, 8));
    }
    const bool pass = boundary <= 1e-12 && constraint <= 1e-12 && collapse_fail == 0;
    return {pass, fmt("boundary error %.1e, velocity-sum error %.1e, collapse mismatches %d/1000", boundary, constraint,
                      collapse_fail)};
}

// 6-8 ----------------------------------------------------------------------------

struct SeedResult {
    double none = 0, social = 0, plus = 0, plus_one = 0;  // test ADE; plus_one uses N_theta = 1
    double do_s = 0, do_p = 0;                             // ADE increase under do(S=0), do(P=0)
};

struct Benchmark {
    std::vector<SeedResult> seeds;
    double seconds = 0;
    double isolated_divergence = 0;
};

Benchmark run_benchmark() {
    const auto t0 = std::chrono::steady_clock::now();
    Benchmark b;
    TrainOptions opt;
    opt.epochs = 600;
    opt.lr = 0.02;
    opt.lr_final = 0.05;
    opt.batch_size = 32;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto data = synthetic_dataset({{ScenarioKind::crossing, 250}, {ScenarioKind::obstacle, 250}}, seed,
                                            SampleSpec{}, 0.2);
        opt.seed = seed;
        SeedResult r;
        auto fit = [&](Variant v, int n_theta) {
            ModelConfig cfg;
            cfg.variant = v;
            cfg.circle.n_theta = n_theta;
            const auto tr = prepare_cases(cfg, data.train);
            auto trained = train(init_params(cfg, seed), tr, {}, opt);
            const auto te = prepare_cases(cfg, data.test);
            return std::pair{std::move(trained.params), evaluate(trained.params, te, 20, seed).ade};
        };
        r.none = fit(Variant::none, 8).second;
        r.social = fit(Variant::social, 8).second;
        auto [plus, plus_ade] = fit(Variant::social_plus, 8);
        r.plus = plus_ade;
        r.plus_one = fit(Variant::social_plus, 1).second;

        double s_sum = 0, p_sum = 0;
        for (const auto& sc : data.test) {
            const auto noise = sample_noise_seed(seed, sample_key(sc.sample));
            s_sum += min_ade(intervene(plus, sc, ZeroS{}, 20, noise).counterfactual, sc.sample.future);
            p_sum += min_ade(intervene(plus, sc, ZeroP{}, 20, noise).counterfactual, sc.sample.future);
        }
        const double n = static_cast<double>(data.test.size());
        r.do_s = s_sum / n - r.plus;
        r.do_p = p_sum / n - r.plus;

        for (const auto& sc : to_cases(generate_synthetic(ScenarioKind::isolated, 50, seed, SampleSpec{}))) {
            const std::vector<InterventionSpec> both{ZeroS{}, ZeroP{}};
            for (const auto& spec : {InterventionSpec{ZeroS{}}, InterventionSpec{ZeroP{}}}) {
                const auto out = intervene(plus, sc, spec, 20, seed);
                b.isolated_divergence = std::max(b.isolated_divergence, divergence(out.factual, out.counterfactual).max_displacement);
            }
            const auto out = intervene(plus, sc, both, 20, seed);
            b.isolated_divergence = std::max(b.isolated_divergence, divergence(out.factual, out.counterfactual).max_displacement);
        }
        std::printf("  seed %llu: ADE none %.4f social %.4f social_plus %.4f (N_theta=1: %.4f); do(S=0) %+.4f do(P=0) %+.4f\n",
                    static_cast<unsigned long long>(seed), r.none, r.social, r.plus, r.plus_one, r.do_s, r.do_p);
        std::fflush(stdout);
        b.seeds.push_back(r);
    }
    b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return b;
}

Outcome conditionality(const Benchmark& b) {
    double none = 0, social = 0, plus = 0;
    int plus_wins = 0;
    for (const auto& r : b.seeds) {
        none += r.none / 5;
        social += r.social / 5;
        plus += r.plus / 5;
        plus_wins += r.plus < r.none;
    }
    const bool pass = none >= social && social >= plus && plus_wins >= 4 && b.seconds < 600;
    return {pass, fmt("mean ADE none %.4f >= social %.4f >= social_plus %.4f; social_plus < none in %d/5 seeds; %.0f s",
                      none, social, plus, plus_wins, b.seconds)};
}

Outcome partitions(const Benchmark& b) {
    int wins = 0;
    double eight = 0, one = 0;
    for (const auto& r : b.seeds) {
        wins += r.plus <= r.plus_one;
        eight += r.plus / 5;
        one += r.plus_one / 5;
    }
    return {wins >= 4, fmt("N_theta=8 <= N_theta=1 in %d/5 seeds (mean %.4f vs %.4f)", wins, eight, one)};
}

Outcome sensitivity(const Benchmark& b) {
    int s_pos = 0, p_pos = 0;
    double s_min = INFINITY, p_min = INFINITY;
    for (const auto& r : b.seeds) {
        s_pos += r.do_s > 0;
        p_pos += r.do_p > 0;
        s_min = std::min(s_min, r.do_s);
        p_min = std::min(p_min, r.do_p);
    }
    const bool pass = s_pos == 5 && p_pos == 5 && b.isolated_divergence == 0.0;
    return {pass, fmt("do(S=0) raises ADE in %d/5 seeds (min %+.4f), do(P=0) in %d/5 (min %+.4f); isolated divergence %g",
                      s_pos, s_min, p_pos, p_min, b.isolated_divergence)};
}

// 9 ------------------------------------------------------------------------------

Outcome parameter_accounting() {
    ModelConfig cfg;
    cfg.variant = Variant::social_plus;
    cfg.fusion = FusionMode::hard;
    const auto hard = param_count(zero_params(cfg));
    cfg.fusion = FusionMode::adaptive;
    const auto adaptive = param_count(zero_params(cfg));
    const std::size_t expect = static_cast<std::size_t>(2 * cfg.d_sc + 1);
    const double share = 100.0 * static_cast<double>(adaptive.group("fusion")) / static_cast<double>(adaptive.total);
    const bool pass = hard.group("fusion") == 0 && adaptive.group("fusion") == expect &&
                      adaptive.total - hard.total == expect && share < 1.0;
    return {pass, fmt("hard extra %zu, adaptive extra %zu (expected %zu) = %.3f%% of %zu", hard.group("fusion"),
                      adaptive.group("fusion"), expect, share, adaptive.total)};
}

// 10 -----------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "scplus_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "run.toml") << "seed = 11\n[data]\nsynthetic = crossing:40, obstacle:40\n"
                                       "[train]\nepochs = 20\n[intervene]\nscenario = scenario.json\n";
    std::ofstream(dir / "scenario.json")
        << R"([{"sample": 0, "specs": [{"kind": "zero_s"}, {"kind": "zero_p"}]},
               {"sample": 3, "spec": {"kind": "manual_neighbor", "mode": "nonlinear", "p0": [-3, 1], "v0": [0.5, 0], "p_end": [-1, 0.5]}},
               {"sample": 5, "spec": {"kind": "physical_box", "min": [0, 0], "max": [300, 300], "label": 1}}])";
    for (const char* out : {"a", "b"})
        for (const char* cmd : {"synth", "train", "eval", "intervene"}) {
            const std::string line = std::string(SCPLUS_CLI) + " --config " + (dir / "run.toml").string() + " --out " +
                                     (dir / out).string() + " " + cmd + " > /dev/null 2>&1";
            const int status = std::system(line.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, std::string("command failed: ") + cmd};
        }
    int files = 0, differ = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++files;
        differ += slurp(e.path()) != slurp(dir / "b" / e.path().filename());
    }
    fs::remove_all(dir);
    return {files > 0 && differ == 0, fmt("%d artifacts compared, %d differ", files, differ)};
}

}  // namespace

// `--known-fail N` (repeatable) lists criteria documented as not met; their FAIL line is
// still printed but does not change the exit code.
int main(int argc, char** argv) {
    std::vector<int> known;
    for (int i = 1; i + 1 < argc; i += 2)
        if (std::string(argv[i]) == "--known-fail") known.push_back(std::atoi(argv[i + 1]));
    int failed = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        const bool expected = std::find(known.begin(), known.end(), id) != known.end();
        std::printf("criterion %d %s: %s (%s)%s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                    !o.pass && expected ? " [known failure, see README]" : "");
        std::fflush(stdout);
        failed += !o.pass && !expected;
    };
    auto timed = [](const std::function<Outcome()>& f, double limit) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o = f();
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.detail += fmt("; %.2f s", s);
        if (s >= limit) {
            o.pass = false;
            o.detail += fmt(" exceeds %.0f s", limit);
        }
        return o;
    };
    report(1, "metric oracle", timed(metric_oracle, 5));
    report(2, "calibration recovery", calibration_recovery());
    report(3, "gradient checks", timed(gradient_checks, 60));
    report(4, "circle invariants", circle_invariants());
    report(5, "manual-neighbor formulas", manual_neighbor_formulas());
    std::printf("benchmark (5 seeds, crossing:250 + obstacle:250, 600 epochs):\n");
    const Benchmark bench = run_benchmark();
    report(6, "conditionality trend", conditionality(bench));
    report(7, "partition trend", partitions(bench));
    report(8, "counterfactual sensitivity", sensitivity(bench));
    report(9, "parameter accounting", parameter_accounting());
    report(10, "determinism", determinism());
    return failed == 0 ? 0 : 1;
}
