#include "scplus/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "scplus/error.hpp"
#include "scplus/json_io.hpp"

namespace scplus {

namespace {
void check_set(const PredictionSet& set, const Path& truth) {
    if (set.trajectories.empty()) throw ShapeError("empty prediction set");
    if (truth.empty()) throw ShapeError("empty ground truth");
    for (const auto& t : set.trajectories)
        if (t.size() != truth.size()) throw ShapeError("prediction and truth lengths differ");
}
}  // namespace

double min_ade(const PredictionSet& set, const Path& truth) {
    check_set(set, truth);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& traj : set.trajectories) {
        double sum = 0.0;
        for (std::size_t t = 0; t < truth.size(); ++t) sum += (truth[t] - traj[t]).norm();
        best = std::min(best, sum / static_cast<double>(truth.size()));
    }
    return best;
}

double min_fde(const PredictionSet& set, const Path& truth) {
    check_set(set, truth);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& traj : set.trajectories) best = std::min(best, (truth.back() - traj.back()).norm());
    return best;
}

std::uint64_t sample_noise_seed(std::uint64_t seed, std::uint64_t key) { return derive_seed(seed, {0xe7a1, key}); }

MetricsReport evaluate(const PredictorParams& params, std::span<const PreparedCase> data, int k, std::uint64_t seed) {
    if (data.empty()) throw ConfigError("evaluation dataset is empty");
    MetricsReport r;
    r.k = k;
    r.seed = seed;
    r.config = params.config;
    r.n_samples = data.size();
    for (const auto& c : data) {
        const auto set = predict_k(params, c.inputs, k, sample_noise_seed(seed, c.key));
        r.per_sample_ade.push_back(min_ade(set, c.truth));
        r.per_sample_fde.push_back(min_fde(set, c.truth));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        r.ade += r.per_sample_ade[i];
        r.fde += r.per_sample_fde[i];
    }
    r.ade /= static_cast<double>(data.size());
    r.fde /= static_cast<double>(data.size());
    return r;
}

MetricsReport evaluate(const PredictorParams& params, std::span<const SceneCase> data, int k, std::uint64_t seed) {
    const auto prepared = prepare_cases(params.config, data);
    return evaluate(params, prepared, k, seed);
}

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& r) {
    Json j;
    j["ade"] = r.ade;
    j["fde"] = r.fde;
    j["n_samples"] = r.n_samples;
    j["k"] = r.k;
    j["seed"] = r.seed;
    j["config"] = to_json(r.config);
    j["per_sample_ade"] = r.per_sample_ade;
    j["per_sample_fde"] = r.per_sample_fde;
    std::ofstream out(path);
    if (!out) throw NotFoundError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& r) {
    std::ofstream out(path);
    if (!out) throw NotFoundError("cannot write '" + path.string() + "'");
    out << "sample,ade,fde\n";
    char buf[96];
    for (std::size_t i = 0; i < r.n_samples; ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, r.per_sample_ade[i], r.per_sample_fde[i]);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "mean,%.17g,%.17g\n", r.ade, r.fde);
    out << buf;
}

// ---------------------------------------------------------------------------------

std::string mask_string(const std::array<bool, 3>& mask) {
    return {mask[0] ? '1' : '0', mask[1] ? '1' : '0', mask[2] ? '1' : '0'};
}

std::array<bool, 3> parse_mask(std::string_view text) {
    if (text.size() != 3 || text.find_first_not_of("01") != std::string_view::npos)
        throw ConfigError("meta mask must be three 0/1 digits (velocity, distance, direction), got '" +
                          std::string(text) + "'");
    return {text[0] == '1', text[1] == '1', text[2] == '1'};
}

std::vector<AblationRow> run_ablation(std::span<const AblationCombo> grid, std::span<const SceneCase> train_data,
                                      std::span<const SceneCase> test_data, const AblationSetup& setup) {
    if (grid.empty()) throw ConfigError("ablation grid is empty");
    if (setup.seeds.empty()) throw ConfigError("ablation needs at least one seed");
    if (setup.baseline >= grid.size()) throw ConfigError("ablation baseline row out of range");

    std::vector<AblationRow> rows;
    for (const auto& combo : grid) {
        AblationRow row{combo, {}, 0.0, 0.0, 0.0, 0.0};
        try {
            ModelConfig cfg = setup.base;
            cfg.variant = combo.variant;
            cfg.fusion = combo.fusion;
            cfg.meta_mask = combo.meta_mask;
            cfg.circle.n_theta = combo.n_theta;
            cfg.validate();
            const auto train_cases = prepare_cases(cfg, train_data);
            const auto test_cases = prepare_cases(cfg, test_data);
            for (auto seed : setup.seeds) {
                TrainOptions opt = setup.train;
                opt.seed = seed;
                auto trained = train(init_params(cfg, seed), train_cases, {}, opt);
                row.per_seed.push_back(evaluate(trained.params, test_cases, setup.eval_k, seed));
                row.mean_ade += row.per_seed.back().ade;
                row.mean_fde += row.per_seed.back().fde;
            }
        } catch (const Error& e) {
            throw Error("ablation combination '" + combo.label + "': " + e.what());
        }
        row.mean_ade /= static_cast<double>(setup.seeds.size());
        row.mean_fde /= static_cast<double>(setup.seeds.size());
        rows.push_back(std::move(row));
    }
    const auto& base = rows[setup.baseline];
    for (auto& r : rows) {
        r.delta_ade_pct = (r.mean_ade - base.mean_ade) / base.mean_ade * 100.0;
        r.delta_fde_pct = (r.mean_fde - base.mean_fde) / base.mean_fde * 100.0;
    }
    return rows;
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
    out << "label,variant,fusion,meta_mask,n_theta,seeds,mean_ade,mean_fde,delta_ade_pct,delta_fde_pct\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%d,%zu,%.17g,%.17g,%.17g,%.17g\n", r.combo.label.c_str(),
                      std::string(to_string(r.combo.variant)).c_str(), std::string(to_string(r.combo.fusion)).c_str(),
                      mask_string(r.combo.meta_mask).c_str(), r.combo.n_theta, r.per_seed.size(), r.mean_ade,
                      r.mean_fde, r.delta_ade_pct, r.delta_fde_pct);
        out << buf;
    }
}

void write_ablation_markdown(std::ostream& out, std::span<const AblationRow> rows) {
    out << "| label | variant | fusion | mask | N_theta | ADE | FDE | dADE | dFDE |\n"
        << "|---|---|---|---|---|---|---|---|---|\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "| %s | %s | %s | %s | %d | %.4f | %.4f | %+.2f%% | %+.2f%% |\n",
                      r.combo.label.c_str(), std::string(to_string(r.combo.variant)).c_str(),
                      std::string(to_string(r.combo.fusion)).c_str(), mask_string(r.combo.meta_mask).c_str(),
                      r.combo.n_theta, r.mean_ade, r.mean_fde, r.delta_ade_pct, r.delta_fde_pct);
        out << buf;
    }
}

}  // namespace scplus
