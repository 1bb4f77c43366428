#include "scplus/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "scplus/causal.hpp"
#include "scplus/error.hpp"
#include "scplus/eval.hpp"
#include "scplus/json_io.hpp"
#include "scplus/plot.hpp"
#include "scplus/service.hpp"

namespace scplus {

namespace fs = std::filesystem;

namespace {

std::vector<SyntheticSet> generate_sets(const std::vector<std::pair<ScenarioKind, std::size_t>>& scenarios,
                                        std::uint64_t seed, const SampleSpec& spec) {
    std::vector<SyntheticSet> sets;
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        sets.push_back(generate_synthetic(scenarios[i].first, scenarios[i].second, derive_seed(seed, {0x5e7, i}), spec));
    return sets;
}

Dataset split_cases(std::vector<SceneCase> all, std::uint64_t seed, double test_fraction) {
    Rng rng(derive_seed(seed, {0x5b17}));
    std::shuffle(all.begin(), all.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(all.size())));
    if (n_test == 0 || n_test >= all.size())
        throw ConfigError("config key 'data.test_fraction': split of " + std::to_string(all.size()) +
                          " samples leaves an empty train or test set");
    Dataset d;
    d.test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
    d.train.assign(all.begin() + static_cast<std::ptrdiff_t>(n_test), all.end());
    return d;
}

}  // namespace

Dataset synthetic_dataset(const std::vector<std::pair<ScenarioKind, std::size_t>>& scenarios, std::uint64_t seed,
                          const SampleSpec& spec, double test_fraction) {
    std::vector<SceneCase> all;
    for (const auto& set : generate_sets(scenarios, seed, spec)) {
        auto cases = to_cases(set);
        all.insert(all.end(), cases.begin(), cases.end());
    }
    return split_cases(std::move(all), seed, test_fraction);
}

Dataset load_dataset(const RunConfig& c) {
    const auto& spec = c.model.sample;
    if (c.source == "synthetic") return synthetic_dataset(c.synthetic, c.seed, spec, c.test_fraction);

    std::vector<SceneClip> clips;
    for (const auto& p : c.annotations) clips.push_back(load_annotations(p, c.unit));
    std::shared_ptr<const SegmentationMap> map;
    if (c.map) map = std::make_shared<const SegmentationMap>(read_pgm(*c.map));

    Dataset d;
    auto add = [&](const SceneClip& clip, std::vector<SceneCase>& into) {
        auto built = build_samples(clip, spec, c.stride);
        d.skipped_agents += built.skipped_agents;
        for (auto& s : built.samples) into.push_back({std::move(s), map, c.calib});
    };
    if (c.held_out.empty()) {
        if (clips.size() < 2) {
            std::vector<SceneCase> all;
            for (const auto& clip : clips) add(clip, all);
            auto split = split_cases(std::move(all), c.seed, c.test_fraction);
            split.skipped_agents = d.skipped_agents;
            return split;
        }
        throw ConfigError("config key 'data.held_out' is required with several annotation files");
    }
    SplitPlan plan;
    try {
        plan = leave_one_out_splits(clips, c.held_out);
    } catch (const NotFoundError& e) {
        throw ConfigError(std::string("config key 'data.held_out': ") + e.what());
    }
    d.warnings = plan.warnings;
    for (const auto& clip : clips) {
        const bool is_test = std::find(plan.test.begin(), plan.test.end(), clip.clip_id) != plan.test.end();
        add(clip, is_test ? d.test : d.train);
    }
    return d;
}

// ---------------------------------------------------------------------------------

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFoundError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Context {
public:
    Context(std::string command, RunConfig config, fs::path out, int jobs)
        : command_(std::move(command)), config_(std::move(config)), out_(std::move(out)), jobs_(jobs) {
        config_.train.jobs = jobs_;
        fs::create_directories(out_);
    }

    const RunConfig& config() const { return config_; }
    const fs::path& out() const { return out_; }
    int jobs() const { return jobs_; }

    /// Registers an artifact and returns its path.
    fs::path artifact(const std::string& name) {
        if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
        return out_ / name;
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(artifact(name), std::ios::binary);
        if (!f) throw NotFoundError("cannot write '" + (out_ / name).string() + "'");
        f << content;
    }

    void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

    void note(const std::string& key, Json value) { notes_[key] = std::move(value); }

    void write_manifest() {
        Json files = Json::array();
        auto names = artifacts_;
        std::sort(names.begin(), names.end());
        for (const auto& name : names) {
            const auto bytes = read_file(out_ / name);
            files.push_back({{"file", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a(bytes))}});
        }
        Json config = Json::object();
        for (const auto& [k, v] : config_.entries) config[k] = v;
        config["seed"] = std::to_string(config_.seed);
        Json m{{"command", command_},
               {"seed", config_.seed},
               {"config", config},
               {"versions",
                {{"scplus", kVersion},
                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)},
                 {"compiler", __VERSION__}}},
               {"artifacts", files}};
        if (!notes_.empty()) m["notes"] = notes_;
        std::ofstream f(out_ / ("manifest_" + command_ + ".json"), std::ios::binary);
        f << m.dump(2) << "\n";
    }

private:
    std::string command_;
    RunConfig config_;
    fs::path out_;
    int jobs_;
    std::vector<std::string> artifacts_;
    Json notes_ = Json::object();
};

Json sample_ref(const SceneCase& c, std::size_t index) {
    return {{"index", index},
            {"clip_id", c.sample.clip_id},
            {"target_id", c.sample.target_id},
            {"start_frame", c.sample.start_frame},
            {"key", hex64(sample_key(c.sample))}};
}

Json dataset_json(const Dataset& d) {
    Json test = Json::array();
    for (std::size_t i = 0; i < d.test.size(); ++i) test.push_back(sample_ref(d.test[i], i));
    return {{"n_train", d.train.size()},
            {"n_test", d.test.size()},
            {"skipped_agents", d.skipped_agents},
            {"warnings", d.warnings},
            {"test_samples", test}};
}

ModelFile resolve_model(Context& ctx) {
    const auto& c = ctx.config();
    if (c.entries.at("model.file") == "zero") return {zero_params(c.model), c.seed};
    const fs::path p = c.model_file ? *c.model_file : ctx.out() / "model.bin";
    if (!fs::exists(p))
        throw NotFoundError("config key 'model.file': no model at '" + p.string() +
                            "' (run `train` first, or set model.file = zero)");
    auto m = load_params(p);
    const auto& mc = m.params.config;
    if (mc.sample.t_h != c.model.sample.t_h || mc.sample.t_f != c.model.sample.t_f)
        throw ConfigError("config keys 'sample.t_h'/'sample.t_f' do not match the model file");
    return m;
}

const SceneCase& test_case(const Dataset& d, std::size_t index, const char* key) {
    if (index >= d.test.size())
        throw ConfigError(std::string("config key '") + key + "': sample " + std::to_string(index) +
                          " is out of range (" + std::to_string(d.test.size()) + " test samples)");
    return d.test[index];
}

std::vector<Path> scene_paths(const PredictionSet& set, const Vec2& offset) {
    std::vector<Path> out;
    for (const auto& t : set.trajectories) out.push_back(to_scene(t, offset));
    return out;
}

PlotScene plot_scene(const SceneCase& c) {
    PlotScene p;
    p.map = c.map.get();
    p.calib = c.calib;
    const Vec2& o = c.sample.origin_offset;
    p.observed = to_scene(c.sample.observed, o);
    p.truth = to_scene(c.sample.future, o);
    for (const auto& n : c.sample.neighbors) p.neighbors.push_back(to_scene(n.observed, o));
    return p;
}

std::string svg_string(const PlotScene& p) {
    std::ostringstream ss;
    write_svg(ss, p);
    return ss.str();
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// --- commands ---------------------------------------------------------------------

void cmd_synth(Context& ctx) {
    const auto& c = ctx.config();
    const auto sets = generate_sets(c.synthetic, c.seed, c.model.sample);
    Json files = Json::array();
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const std::string stem = "synthetic_" + std::to_string(i) + "_" + std::string(to_string(sets[i].kind));
        std::ostringstream ann;
        write_annotations(ann, sets[i].clip);
        ctx.write(stem + ".txt", ann.str());
        write_pgm(ctx.artifact(stem + ".pgm"), sets[i].map);
        files.push_back({{"kind", to_string(sets[i].kind)},
                         {"annotations", stem + ".txt"},
                         {"map", stem + ".pgm"},
                         {"samples", sets[i].samples.size()},
                         {"calib", to_json(sets[i].calib)}});
    }
    ctx.write_json("synthetic.json", files);
    ctx.write_json("dataset.json", dataset_json(load_dataset(c)));
}

void cmd_ingest(Context& ctx) {
    const auto& c = ctx.config();
    const auto d = load_dataset(c);
    ctx.write_json("dataset.json", dataset_json(d));
    Json reps = Json::array();
    for (std::size_t i = 0; i < d.test.size(); ++i) {
        const auto& s = d.test[i];
        const auto nb = nearest_neighbors(s.sample, c.model.circle.k_neighbors);
        reps.push_back({{"index", i},
                        {"social", to_json(social_circle(s.sample, nb, c.model.circle))},
                        {"physical", to_json(physical_circle(s.sample, s.map.get(), s.calib, c.model.circle))}});
    }
    ctx.write_json("reps.json", reps);
    if (!d.test.empty()) {
        const auto& s = d.test.front();
        std::ostringstream social, physical;
        write_rep_csv(social, social_circle(s.sample, nearest_neighbors(s.sample, c.model.circle.k_neighbors),
                                            c.model.circle),
                      "social");
        write_rep_csv(physical, physical_circle(s.sample, s.map.get(), s.calib, c.model.circle), "physical");
        ctx.write("reps_test0_social.csv", social.str());
        ctx.write("reps_test0_physical.csv", physical.str());
    }
}

void cmd_calibrate(Context& ctx) {
    const auto& c = ctx.config();
    if (!c.calib_csv) throw ConfigError("config key 'data.calib_csv' is required for calibrate");
    const auto pairs = read_calib_csv(*c.calib_csv);
    const auto fit = fit_calibration(pairs);
    Json j = to_json(fit.calib);
    j["residual_rms"] = fit.residual_rms;
    j["pairs"] = pairs.size();
    ctx.write_json("calib.json", j);
    ctx.note("data.calib", fmt17(fit.calib.w.x()) + ", " + fmt17(fit.calib.w.y()) + ", " + fmt17(fit.calib.b.x()) +
                               ", " + fmt17(fit.calib.b.y()));
}

void cmd_train(Context& ctx) {
    const auto& c = ctx.config();
    const auto d = load_dataset(c);
    const auto train_cases = prepare_cases(c.model, d.train);
    auto result = train(init_params(c.model, c.seed), train_cases, {}, c.train);
    save_params(ctx.artifact("model.bin"), result.params, c.seed);
    write_loss_csv(ctx.artifact("loss.csv"), result.curve);
    ctx.write_json("params.json", to_json(param_count(result.params)));
}

void cmd_eval(Context& ctx) {
    const auto& c = ctx.config();
    const auto model = resolve_model(ctx);
    const auto d = load_dataset(c);
    const auto report = evaluate(model.params, std::span<const SceneCase>(d.test), c.eval_k, c.seed);
    write_metrics_json(ctx.artifact("metrics.json"), report);
    write_metrics_csv(ctx.artifact("metrics.csv"), report);
}

void cmd_ablate(Context& ctx) {
    const auto& c = ctx.config();
    const auto d = load_dataset(c);
    std::vector<AblationCombo> grid;
    for (auto v : c.ablate_variants)
        for (auto f : c.ablate_fusions)
            for (const auto& m : c.ablate_masks)
                for (int n : c.ablate_n_theta) {
                    // Fusion and mask only matter for variants that use them; skip duplicates.
                    if (v != Variant::social_plus && f != c.ablate_fusions.front()) continue;
                    if (v == Variant::none && m != c.ablate_masks.front()) continue;
                    if (v == Variant::none && n != c.ablate_n_theta.front()) continue;
                    std::string label = std::string(to_string(v));
                    if (v == Variant::social_plus) label += "-" + std::string(to_string(f));
                    if (v != Variant::none) label += "-m" + mask_string(m) + "-n" + std::to_string(n);
                    grid.push_back({label, v, f, m, n});
                }
    AblationSetup setup{c.model, c.train, c.ablate_seeds, c.eval_k, 0};
    const auto rows = run_ablation(grid, d.train, d.test, setup);
    std::ostringstream csv, md;
    write_ablation_csv(csv, rows);
    write_ablation_markdown(md, rows);
    ctx.write("ablation.csv", csv.str());
    ctx.write("ablation.md", md.str());
    Json per_seed = Json::array();
    for (const auto& r : rows)
        for (const auto& m : r.per_seed) per_seed.push_back({{"label", r.combo.label}, {"seed", m.seed}, {"ade", m.ade}, {"fde", m.fde}});
    ctx.write_json("ablation_runs.json", per_seed);
}

void cmd_intervene(Context& ctx) {
    const auto& c = ctx.config();
    if (!c.scenario) throw ConfigError("config key 'intervene.scenario' is required for intervene");
    const auto model = resolve_model(ctx);
    const auto d = load_dataset(c);
    std::vector<ScenarioEntry> entries;
    try {
        entries = scenario_from_json(Json::parse(read_file(*c.scenario)));
    } catch (const Json::exception& e) {
        throw ConfigError("config key 'intervene.scenario': " + std::string(e.what()));
    }
    Json reports = Json::array();
    std::string csv = "entry,sample,kinds,mean_displacement,max_displacement,ade_factual,ade_counterfactual,"
                      "fde_factual,fde_counterfactual\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const auto& scene = test_case(d, e.sample, "intervene.scenario");
        const auto out = intervene(model.params, scene, e.specs, c.eval_k,
                                   sample_noise_seed(c.seed, sample_key(scene.sample)));
        const Path* truth = scene.sample.future.empty() ? nullptr : &scene.sample.future;
        const auto div = divergence(out.factual, out.counterfactual, truth);

        Json specs = Json::array();
        std::string kinds;
        for (const auto& s : e.specs) {
            specs.push_back(to_json(s));
            kinds += (kinds.empty() ? "" : "+") + kind_name(s);
        }
        reports.push_back({{"entry", i},
                           {"sample", sample_ref(scene, e.sample)},
                           {"specs", specs},
                           {"divergence", to_json(div)},
                           {"factual", to_json(out.factual)},
                           {"counterfactual", to_json(out.counterfactual)}});
        csv += std::to_string(i) + "," + std::to_string(e.sample) + "," + kinds + "," + fmt17(div.mean_displacement) +
               "," + fmt17(div.max_displacement) + "," + (truth ? fmt17(*div.ade_factual) : "") + "," +
               (truth ? fmt17(*div.ade_counterfactual) : "") + "," + (truth ? fmt17(*div.fde_factual) : "") + "," +
               (truth ? fmt17(*div.fde_counterfactual) : "") + "\n";

        PlotScene p = plot_scene(scene);
        p.map = out.edited.scene.map.get();
        const Vec2& o = scene.sample.origin_offset;
        p.factual = scene_paths(out.factual, o);
        p.counterfactual = scene_paths(out.counterfactual, o);
        for (const auto& m : out.edited.manual_neighbors) p.manual_neighbors.push_back(to_scene(m, o));
        ctx.write("intervene_" + std::to_string(i) + ".svg", svg_string(p));
    }
    ctx.write_json("interventions.json", reports);
    ctx.write("interventions.csv", csv);
}

void cmd_plot(Context& ctx, const std::vector<std::size_t>& samples) {
    const auto& c = ctx.config();
    const auto model = resolve_model(ctx);
    const auto d = load_dataset(c);
    for (auto idx : samples) {
        const auto& scene = test_case(d, idx, "--sample");
        const auto set = predict_k(model.params, prepare_inputs(model.params.config, scene), c.eval_k,
                                   sample_noise_seed(c.seed, sample_key(scene.sample)));
        PlotScene p = plot_scene(scene);
        p.factual = scene_paths(set, scene.sample.origin_offset);
        ctx.write("plot_" + std::to_string(idx) + ".svg", svg_string(p));
    }
}

void cmd_serve(Context& ctx, const std::string& host, int port) {
    const auto& c = ctx.config();
    auto model = resolve_model(ctx);
    auto d = load_dataset(c);
    ServiceOptions opt{c.eval_k, c.seed, c.static_dir};
    PlaygroundService service(std::move(model), std::move(d.test), opt);
    const int bound = service.bind(host, port);
    ctx.note("listen", host + ":" + std::to_string(bound));
    ctx.write_manifest();
    std::cout << "serving on http://" << host << ":" << bound << std::endl;
    service.run();
}

const char* error_type(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const DuplicateRecordError*>(&e)) return "DuplicateRecordError";
    if (dynamic_cast<const RankDeficiencyError*>(&e)) return "RankDeficiencyError";
    if (dynamic_cast<const ShapeError*>(&e)) return "ShapeError";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const NotFoundError*>(&e)) return "NotFoundError";
    if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "InternalError";
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const NotFoundError*>(&e)) return 3;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const DuplicateRecordError*>(&e)) return 4;
    if (dynamic_cast<const NumericError*>(&e)) return 5;
    return 1;
}

void report_error(const std::string& type, const std::string& message) {
    std::cerr << Json{{"error", {{"type", type}, {"message", message}}}}.dump() << std::endl;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"scplus: circle-conditioned trajectory prediction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out = "out";
    int jobs = 1;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "Run configuration file (key = value, [section] headers)")
        ->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Seed for data, initialization and noise (overrides the config)");
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads for batch gradients")->check(CLI::Range(1, 256))->capture_default_str();
    app.add_option("--set", sets, "Override a config key: --set section.key=value (repeatable)")
        ->allow_extra_args(false);

    auto* synth = app.add_subcommand("synth", "Generate synthetic scenes (annotations + maps)");
    auto* ingest = app.add_subcommand("ingest", "Load annotations, build samples and circle representations");
    auto* calibrate = app.add_subcommand("calibrate", "Fit the scene-to-pixel calibration from data.calib_csv");
    auto* train_cmd = app.add_subcommand("train", "Train a predictor");
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate best-of-k ADE/FDE on the test split");
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate the ablation grid");
    auto* intervene_cmd = app.add_subcommand("intervene", "Run an intervention scenario file");
    auto* plot = app.add_subcommand("plot", "Plot test samples with predictions as SVG");
    std::vector<std::size_t> plot_samples{0};
    plot->add_option("--sample", plot_samples, "Test sample indices to plot, comma separated")
        ->delimiter(',')
        ->allow_extra_args(false);
    auto* serve = app.add_subcommand("serve", "Host the playground HTTP API");
    std::string host;
    int port = -1;
    std::string static_dir;
    serve->add_option("--host", host, "Bind address (default: serve.host)");
    serve->add_option("--port", port, "Bind port, 0 picks a free one (default: serve.port)")->check(CLI::Range(0, 65535));
    serve->add_option("--static", static_dir, "Directory with the UI bundle (default: serve.static_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("UsageError", e.what());
        return 2;
    }

    const auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        KeyValues kv;
        fs::path base;
        if (!config_path.empty()) {
            kv = parse_key_values(read_file(config_path));
            base = fs::path(config_path).parent_path();
        }
        if (*seed_opt) kv["seed"] = std::to_string(seed);
        apply_overrides(kv, sets);
        if (command == "serve" && !static_dir.empty()) kv["serve.static_dir"] = static_dir;
        auto cfg = make_run_config(kv, base);

        Context ctx(command, std::move(cfg), out, jobs);
        if (command == "synth") cmd_synth(ctx);
        else if (command == "ingest") cmd_ingest(ctx);
        else if (command == "calibrate") cmd_calibrate(ctx);
        else if (command == "train") cmd_train(ctx);
        else if (command == "eval") cmd_eval(ctx);
        else if (command == "ablate") cmd_ablate(ctx);
        else if (command == "intervene") cmd_intervene(ctx);
        else if (command == "plot") cmd_plot(ctx, plot_samples);
        else if (command == "serve") {
            cmd_serve(ctx, host.empty() ? ctx.config().host : host, port < 0 ? ctx.config().port : port);
            return 0;
        }
        ctx.write_manifest();
        (void)synth, (void)ingest, (void)calibrate, (void)train_cmd, (void)eval_cmd, (void)ablate, (void)intervene_cmd;
        return 0;
    } catch (const std::exception& e) {
        report_error(error_type(e), e.what());
        return exit_code(e);
    }
}

}  // namespace scplus
