#pragma once

// Toy trajectory predictor conditioned on circle representations.
//
// Network, for backbone length L (t_h, or N_theta for padded backbones):
//
//   h      = tanh(W_traj * x + b_traj)                x: observed positions / coord_scale,
//                                                       flattened, zero padded to 2L
//   f_s    = encode(social rep),  f_p = encode(physical rep)
//   f      = f_s | fuse(f_s, f_p)                      depending on the variant
//   c      = flatten(align_to_backbone(f))             L * d_sc
//   a_0    = tanh(W_0 [h, c, z] + b_0)                z: standard normal noise
//   a_i    = tanh(W_i a_{i-1} + b_i)                  i < layers
//   o      = W_out a_last + b_out                      t_f per-step offsets
//   y_t    = sum_{s <= t} o_s
//
// Training minimizes the best-of-k mean displacement ("variety" loss) with plain
// gradient descent; the min is differentiated through the argmin trajectory.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "scplus/circle.hpp"
#include "scplus/random.hpp"
#include "scplus/scene.hpp"
#include "scplus/trajdata.hpp"

namespace scplus {

enum class Variant { none, social, social_plus };

Variant parse_variant(std::string_view name);
std::string_view to_string(Variant v) noexcept;

struct ModelConfig {
    SampleSpec sample;
    CircleSpec circle;
    int d = 32;
    int d_sc = 16;
    int k_gen = 20;
    int noise_dim = 8;
    int layers = 2;
    Variant variant = Variant::social_plus;
    FusionMode fusion = FusionMode::adaptive;
    std::array<bool, 3> meta_mask{true, true, true};  // velocity, distance, direction
    bool padded_backbone = false;
    double coord_scale = 4.0;

    void validate() const;
    [[nodiscard]] int backbone_steps() const;
    [[nodiscard]] bool uses_social() const noexcept { return variant != Variant::none; }
    [[nodiscard]] bool uses_physical() const noexcept { return variant == Variant::social_plus; }
};

struct Slot {
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(rows) * cols; }
};

struct TensorInfo {
    std::string name;
    std::string group;
    Slot slot;
};

inline constexpr std::array<std::string_view, 4> kParamGroups{"traj_encoder", "circle_encoder", "fusion", "decoder"};

struct ParamLayout {
    Slot traj_W, traj_b;
    Slot social_W, social_b, physical_W, physical_b;
    Slot gate_u, gate_c;
    std::vector<Slot> hidden_W, hidden_b;  // decoder hidden layers; [0] takes [h, c, z]
    Slot out_W, out_b;
    std::vector<TensorInfo> tensors;
    std::size_t total = 0;

    static ParamLayout build(const ModelConfig& config);
};

struct PredictorParams {
    ModelConfig config;
    ParamLayout layout;
    std::vector<double> values;

    [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> mat(const Slot& s) const {
        return {values.data() + s.offset, s.rows, s.cols};
    }
    [[nodiscard]] Eigen::Map<const Eigen::VectorXd> vec(const Slot& s) const {
        return {values.data() + s.offset, static_cast<Eigen::Index>(s.size())};
    }
};

PredictorParams zero_params(const ModelConfig& config);
PredictorParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ParamCount {
    std::array<std::size_t, 4> groups{};  // in kParamGroups order
    std::size_t total = 0;

    [[nodiscard]] std::size_t group(std::string_view name) const;
};

ParamCount param_count(const PredictorParams& params);

// ---------------------------------------------------------------------------------
// Inference

struct PreparedInputs {
    Eigen::VectorXd traj;      // 2L
    SocialCircleRep social;    // meta mask applied
    PhysicalCircleRep physical;
};

PreparedInputs prepare_inputs(const ModelConfig& config, const SceneCase& scene);

/// Replacement values for the encoded representations (interventions).
struct RepOverrides {
    std::optional<Features> f_s;
    std::optional<Features> f_p;
};

struct EncodedState {
    Eigen::VectorXd h_traj;
    Features f_s, f_p;
    FusionResult fusion;
    Eigen::VectorXd circle_flat;
    Eigen::VectorXd pre0;  // first decoder pre-activation without the noise term
};

EncodedState encode_state(const PredictorParams& params, const PreparedInputs& inputs,
                          const RepOverrides& overrides = {});
Path decode(const PredictorParams& params, const EncodedState& state, const Eigen::Ref<const Eigen::VectorXd>& noise);
Path forward(const PredictorParams& params, const PreparedInputs& inputs,
             const Eigen::Ref<const Eigen::VectorXd>& noise, const RepOverrides& overrides = {});

struct PredictionSet {
    std::vector<Path> trajectories;

    [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
    friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

Eigen::VectorXd draw_noise(Rng& rng, int dim);

PredictionSet predict_k(const PredictorParams& params, const PreparedInputs& inputs, int k, std::uint64_t seed,
                        const RepOverrides& overrides = {});

// ---------------------------------------------------------------------------------
// Training

double mean_displacement(const Path& pred, const Path& truth);
double loss_variety(const PredictionSet& set, const Path& truth);

struct BatchItem {
    const PreparedInputs* inputs = nullptr;
    const Path* truth = nullptr;
    Eigen::MatrixXd noise;  // k x noise_dim
};

struct GradientResult {
    std::vector<double> grad;  // same layout as params.values
    double loss = 0.0;         // mean over the batch
};

/// Single-item loss and gradient (accumulated into `grad`, which must be zeroed by the caller).
double item_gradient(const PredictorParams& params, const BatchItem& item, std::span<double> grad);

/// Mean loss only; same noise convention as the gradient.
double batch_loss(const PredictorParams& params, std::span<const BatchItem> batch);

/// Mean gradient over the batch. Per-item terms may run on `jobs` threads; they are
/// reduced in batch order so results do not depend on `jobs`.
GradientResult gradient(const PredictorParams& params, std::span<const BatchItem> batch, int jobs = 1);

struct PreparedCase {
    PreparedInputs inputs;
    Path truth;
    std::uint64_t key = 0;
};

std::vector<PreparedCase> prepare_cases(const ModelConfig& config, std::span<const SceneCase> cases);

struct TrainOptions {
    int epochs = 200;
    double lr = 1e-3;
    double lr_final = 1.0;  // cosine decay from lr to lr * lr_final over the epochs; 1 keeps lr fixed
    int batch_size = 64;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct EpochLoss {
    int epoch = 0;
    double train = 0.0;
    std::optional<double> val;
};

struct TrainResult {
    PredictorParams params;
    std::vector<EpochLoss> curve;
};

TrainResult train(PredictorParams init, std::span<const PreparedCase> data, std::span<const PreparedCase> val,
                  const TrainOptions& options);

// ---------------------------------------------------------------------------------
// Persistence

struct ModelFile {
    PredictorParams params;
    std::uint64_t seed = 0;
};

void save_params(const std::filesystem::path& path, const PredictorParams& params, std::uint64_t seed);
ModelFile load_params(const std::filesystem::path& path);

void write_loss_csv(const std::filesystem::path& path, std::span<const EpochLoss> curve);

}  // namespace scplus
