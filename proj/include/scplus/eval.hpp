#pragma once

// Best-of-k displacement metrics, dataset evaluation and the ablation harness.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scplus/predictor.hpp"
#include "scplus/scene.hpp"

namespace scplus {

/// min_k (1/t_f) sum_t ||p_t - p^k_t||
double min_ade(const PredictionSet& set, const Path& truth);
/// min_k ||p_T - p^k_T||
double min_fde(const PredictionSet& set, const Path& truth);

struct MetricsReport {
    double ade = 0.0;
    double fde = 0.0;
    std::vector<double> per_sample_ade;
    std::vector<double> per_sample_fde;
    std::size_t n_samples = 0;
    int k = 20;
    std::uint64_t seed = 0;
    ModelConfig config;
};

/// Noise for each sample comes from a stream keyed by (seed, sample content), so
/// per-sample metrics do not depend on dataset order or duplication.
std::uint64_t sample_noise_seed(std::uint64_t seed, std::uint64_t key);

MetricsReport evaluate(const PredictorParams& params, std::span<const PreparedCase> data, int k, std::uint64_t seed);
MetricsReport evaluate(const PredictorParams& params, std::span<const SceneCase> data, int k, std::uint64_t seed);

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);

// ---------------------------------------------------------------------------------

struct AblationCombo {
    std::string label;
    Variant variant = Variant::social_plus;
    FusionMode fusion = FusionMode::adaptive;
    std::array<bool, 3> meta_mask{true, true, true};
    int n_theta = 8;
};

struct AblationSetup {
    ModelConfig base;            // variant/fusion/mask/n_theta are overridden per combination
    TrainOptions train;          // seed is overridden per run
    std::vector<std::uint64_t> seeds;
    int eval_k = 20;
    std::size_t baseline = 0;    // row the percentage deltas refer to
};

struct AblationRow {
    AblationCombo combo;
    std::vector<MetricsReport> per_seed;
    double mean_ade = 0.0;
    double mean_fde = 0.0;
    double delta_ade_pct = 0.0;  // (row - baseline) / baseline * 100
    double delta_fde_pct = 0.0;
};

/// Trains and evaluates every combination for every seed.
std::vector<AblationRow> run_ablation(std::span<const AblationCombo> grid, std::span<const SceneCase> train_data,
                                      std::span<const SceneCase> test_data, const AblationSetup& setup);

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);
void write_ablation_markdown(std::ostream& out, std::span<const AblationRow> rows);

std::string mask_string(const std::array<bool, 3>& mask);
std::array<bool, 3> parse_mask(std::string_view text);

}  // namespace scplus
