#include "scplus/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "scplus/error.hpp"
#include "scplus/json_io.hpp"

namespace scplus {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Variant parse_variant(std::string_view name) {
    if (name == "none") return Variant::none;
    if (name == "social") return Variant::social;
    if (name == "social_plus") return Variant::social_plus;
    throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::none: return "none";
        case Variant::social: return "social";
        case Variant::social_plus: return "social_plus";
    }
    return "none";
}

void ModelConfig::validate() const {
    sample.validate();
    circle.validate();
    if (d <= 0) throw ConfigError("model.d must be > 0");
    if (d_sc <= 0) throw ConfigError("model.d_sc must be > 0");
    if (k_gen < 1) throw ConfigError("model.k_gen must be >= 1");
    if (noise_dim < 0) throw ConfigError("model.noise_dim must be >= 0");
    if (layers < 1) throw ConfigError("model.layers must be >= 1");
    if (!(coord_scale > 0.0)) throw ConfigError("model.coord_scale must be > 0");
    (void)backbone_steps();
}

int ModelConfig::backbone_steps() const {
    if (!uses_social()) return sample.t_h;
    return backbone_length(circle.n_theta, sample.t_h, padded_backbone);
}

ParamLayout ParamLayout::build(const ModelConfig& config) {
    config.validate();
    ParamLayout l;
    auto add = [&](std::string name, std::string group, int rows, int cols) {
        Slot s{l.total, rows, cols};
        l.total += s.size();
        l.tensors.push_back({std::move(name), std::move(group), s});
        return s;
    };
    const int steps = config.backbone_steps();
    l.traj_W = add("traj.W", "traj_encoder", config.d, 2 * steps);
    l.traj_b = add("traj.b", "traj_encoder", config.d, 1);
    if (config.uses_social()) {
        l.social_W = add("social.W", "circle_encoder", config.d_sc, 3);
        l.social_b = add("social.b", "circle_encoder", config.d_sc, 1);
    }
    if (config.uses_physical()) {
        l.physical_W = add("physical.W", "circle_encoder", config.d_sc, 3);
        l.physical_b = add("physical.b", "circle_encoder", config.d_sc, 1);
        if (config.fusion == FusionMode::adaptive) {
            l.gate_u = add("gate.u", "fusion", 2 * config.d_sc, 1);
            l.gate_c = add("gate.c", "fusion", 1, 1);
        }
    }
    const int circle_width = config.uses_social() ? steps * config.d_sc : 0;
    int fan_in = config.d + circle_width + config.noise_dim;
    for (int i = 0; i < config.layers; ++i) {
        l.hidden_W.push_back(add("hidden" + std::to_string(i) + ".W", "decoder", config.d, fan_in));
        l.hidden_b.push_back(add("hidden" + std::to_string(i) + ".b", "decoder", config.d, 1));
        fan_in = config.d;
    }
    l.out_W = add("out.W", "decoder", 2 * config.sample.t_f, config.d);
    l.out_b = add("out.b", "decoder", 2 * config.sample.t_f, 1);
    return l;
}

PredictorParams zero_params(const ModelConfig& config) {
    PredictorParams p{config, ParamLayout::build(config), {}};
    p.values.assign(p.layout.total, 0.0);
    return p;
}

PredictorParams init_params(const ModelConfig& config, std::uint64_t seed) {
    PredictorParams p = zero_params(config);
    Rng rng(derive_seed(seed, {0x1417}));
    auto fill = [&](const Slot& s, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < s.size(); ++i) p.values[s.offset + i] = u(rng);
    };
    auto xavier = [](const Slot& s) { return std::sqrt(6.0 / (s.rows + s.cols)); };
    const auto& l = p.layout;
    fill(l.traj_W, xavier(l.traj_W));
    if (l.social_W.size()) fill(l.social_W, 0.2);
    if (l.physical_W.size()) fill(l.physical_W, 0.2);
    if (l.gate_u.size()) fill(l.gate_u, 0.1);
    for (const auto& s : l.hidden_W) fill(s, xavier(s));
    fill(l.out_W, 0.1 * xavier(l.out_W));
    return p;
}

std::size_t ParamCount::group(std::string_view name) const {
    for (std::size_t i = 0; i < kParamGroups.size(); ++i)
        if (kParamGroups[i] == name) return groups[i];
    throw NotFoundError("unknown parameter group '" + std::string(name) + "'");
}

ParamCount param_count(const PredictorParams& params) {
    ParamCount c;
    for (const auto& t : params.layout.tensors) {
        for (std::size_t i = 0; i < kParamGroups.size(); ++i)
            if (kParamGroups[i] == t.group) c.groups[i] += t.slot.size();
        c.total += t.slot.size();
    }
    return c;
}

// ---------------------------------------------------------------------------------

PreparedInputs prepare_inputs(const ModelConfig& config, const SceneCase& scene) {
    const auto& s = scene.sample;
    if (s.observed.size() != static_cast<std::size_t>(config.sample.t_h))
        throw ShapeError("sample has " + std::to_string(s.observed.size()) + " observed steps, model expects " +
                         std::to_string(config.sample.t_h));
    PreparedInputs in;
    const int steps = config.backbone_steps();
    in.traj = VectorXd::Zero(2 * steps);
    for (std::size_t t = 0; t < s.observed.size(); ++t) {
        in.traj[static_cast<Index>(2 * t)] = s.observed[t].x() / config.coord_scale;
        in.traj[static_cast<Index>(2 * t + 1)] = s.observed[t].y() / config.coord_scale;
    }
    if (config.uses_social()) {
        const auto ids = nearest_neighbors(s, config.circle.k_neighbors);
        in.social = social_circle(s, ids, config.circle);
        for (auto& row : in.social.rows)
            for (int m = 0; m < 3; ++m)
                if (!config.meta_mask[static_cast<std::size_t>(m)]) row[static_cast<std::size_t>(m)] = 0.0;
    }
    if (config.uses_physical()) in.physical = physical_circle(s, scene.map.get(), scene.calib, config.circle);
    return in;
}

EncodedState encode_state(const PredictorParams& params, const PreparedInputs& inputs, const RepOverrides& overrides) {
    const auto& cfg = params.config;
    const auto& l = params.layout;
    if (inputs.traj.size() != l.traj_W.cols) throw ShapeError("trajectory input width does not match the model");

    EncodedState st;
    st.h_traj = (params.mat(l.traj_W) * inputs.traj + params.vec(l.traj_b)).array().tanh();

    const int steps = cfg.backbone_steps();
    auto check = [&](const Features& f, const char* what) {
        if (f.rows() != cfg.circle.n_theta || f.cols() != cfg.d_sc)
            throw ShapeError(std::string(what) + " must be n_theta x d_sc");
    };
    if (cfg.uses_social()) {
        if (inputs.social.size() != static_cast<std::size_t>(cfg.circle.n_theta))
            throw ShapeError("social representation has the wrong number of partitions");
        st.f_s = overrides.f_s ? *overrides.f_s : encode(inputs.social, params.mat(l.social_W), params.vec(l.social_b));
        check(st.f_s, "social features");
        if (cfg.uses_physical()) {
            if (inputs.physical.size() != static_cast<std::size_t>(cfg.circle.n_theta))
                throw ShapeError("physical representation has the wrong number of partitions");
            st.f_p = overrides.f_p ? *overrides.f_p
                                   : encode(inputs.physical, params.mat(l.physical_W), params.vec(l.physical_b));
            check(st.f_p, "physical features");
            if (cfg.fusion == FusionMode::adaptive)
                st.fusion = fuse(st.f_s, st.f_p, cfg.fusion, params.vec(l.gate_u), params.values[l.gate_c.offset]);
            else
                st.fusion = fuse(st.f_s, st.f_p, cfg.fusion);
        } else {
            st.fusion.fused = st.f_s;
        }
        const Features aligned = align_to_backbone(st.fusion.fused, steps, cfg.padded_backbone);
        st.circle_flat.resize(aligned.size());
        for (Index r = 0; r < aligned.rows(); ++r)
            st.circle_flat.segment(r * aligned.cols(), aligned.cols()) = aligned.row(r).transpose();
    }

    const auto W0 = params.mat(l.hidden_W[0]);
    st.pre0 = params.vec(l.hidden_b[0]) + W0.leftCols(cfg.d) * st.h_traj;
    if (st.circle_flat.size() > 0) st.pre0 += W0.middleCols(cfg.d, st.circle_flat.size()) * st.circle_flat;
    return st;
}

namespace {

struct DecodeTrace {
    std::vector<VectorXd> acts;  // hidden activations
    VectorXd out;
};

void decode_trace(const PredictorParams& params, const EncodedState& st, const Eigen::Ref<const VectorXd>& noise,
                  DecodeTrace& tr) {
    const auto& cfg = params.config;
    const auto& l = params.layout;
    if (noise.size() != cfg.noise_dim) throw ShapeError("noise vector has the wrong width");
    tr.acts.resize(l.hidden_W.size());
    VectorXd pre = st.pre0;
    if (cfg.noise_dim > 0) pre += params.mat(l.hidden_W[0]).rightCols(cfg.noise_dim) * noise;
    tr.acts[0] = pre.array().tanh();
    for (std::size_t i = 1; i < l.hidden_W.size(); ++i)
        tr.acts[i] = (params.mat(l.hidden_W[i]) * tr.acts[i - 1] + params.vec(l.hidden_b[i])).array().tanh();
    tr.out = params.mat(l.out_W) * tr.acts.back() + params.vec(l.out_b);
}

Path offsets_to_path(const VectorXd& out) {
    Path p(static_cast<std::size_t>(out.size() / 2));
    Vec2 acc = Vec2::Zero();
    for (std::size_t t = 0; t < p.size(); ++t) {
        acc += Vec2(out[static_cast<Index>(2 * t)], out[static_cast<Index>(2 * t + 1)]);
        p[t] = acc;
    }
    return p;
}

}  // namespace

Path decode(const PredictorParams& params, const EncodedState& state, const Eigen::Ref<const VectorXd>& noise) {
    DecodeTrace tr;
    decode_trace(params, state, noise, tr);
    return offsets_to_path(tr.out);
}

Path forward(const PredictorParams& params, const PreparedInputs& inputs, const Eigen::Ref<const VectorXd>& noise,
             const RepOverrides& overrides) {
    return decode(params, encode_state(params, inputs, overrides), noise);
}

VectorXd draw_noise(Rng& rng, int dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z[i] = n(rng);
    return z;
}

PredictionSet predict_k(const PredictorParams& params, const PreparedInputs& inputs, int k, std::uint64_t seed,
                        const RepOverrides& overrides) {
    if (k < 1) throw ConfigError("k must be >= 1");
    const EncodedState st = encode_state(params, inputs, overrides);
    Rng rng(seed);
    PredictionSet set;
    set.trajectories.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) set.trajectories.push_back(decode(params, st, draw_noise(rng, params.config.noise_dim)));
    return set;
}

// ---------------------------------------------------------------------------------

double mean_displacement(const Path& pred, const Path& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw ShapeError("prediction and truth lengths differ");
    double s = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) s += (pred[t] - truth[t]).norm();
    return s / static_cast<double>(pred.size());
}

double loss_variety(const PredictionSet& set, const Path& truth) {
    if (set.trajectories.empty()) throw ShapeError("empty prediction set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : set.trajectories) best = std::min(best, mean_displacement(p, truth));
    return best;
}

double item_gradient(const PredictorParams& params, const BatchItem& item, std::span<double> grad) {
    const auto& cfg = params.config;
    const auto& l = params.layout;
    const Path& truth = *item.truth;
    if (truth.size() != static_cast<std::size_t>(cfg.sample.t_f)) throw ShapeError("truth length must equal t_f");
    if (item.noise.rows() < 1 || item.noise.cols() != cfg.noise_dim) throw ShapeError("noise must be k x noise_dim");

    const EncodedState st = encode_state(params, *item.inputs);

    // Forward every draw; keep the trace of the best one (lowest index on ties).
    DecodeTrace best, tr;
    Path best_path;
    double best_loss = std::numeric_limits<double>::infinity();
    Index best_k = 0;
    for (Index k = 0; k < item.noise.rows(); ++k) {
        decode_trace(params, st, item.noise.row(k).transpose(), tr);
        Path p = offsets_to_path(tr.out);
        const double loss = mean_displacement(p, truth);
        if (loss < best_loss) {
            best_loss = loss;
            best_k = k;
            std::swap(best, tr);
            best_path = std::move(p);
        }
    }

    auto gmat = [&](const Slot& s) { return Eigen::Map<MatrixXd>(grad.data() + s.offset, s.rows, s.cols); };
    auto gvec = [&](const Slot& s) {
        return Eigen::Map<VectorXd>(grad.data() + s.offset, static_cast<Index>(s.size()));
    };

    // d loss / d offsets: reverse cumulative sum of the per-step unit residuals.
    const int t_f = cfg.sample.t_f;
    VectorXd g_out = VectorXd::Zero(2 * t_f);
    Vec2 acc = Vec2::Zero();
    for (int t = t_f - 1; t >= 0; --t) {
        const Vec2 r = best_path[static_cast<std::size_t>(t)] - truth[static_cast<std::size_t>(t)];
        const double n = r.norm();
        if (n > 0.0) acc += r / (n * t_f);
        g_out[2 * t] = acc.x();
        g_out[2 * t + 1] = acc.y();
    }

    gmat(l.out_W).noalias() += g_out * best.acts.back().transpose();
    gvec(l.out_b) += g_out;
    VectorXd g_a = params.mat(l.out_W).transpose() * g_out;

    for (std::size_t i = l.hidden_W.size(); i-- > 0;) {
        const VectorXd g_z = g_a.array() * (1.0 - best.acts[i].array().square());
        gvec(l.hidden_b[i]) += g_z;
        if (i > 0) {
            gmat(l.hidden_W[i]).noalias() += g_z * best.acts[i - 1].transpose();
            g_a = params.mat(l.hidden_W[i]).transpose() * g_z;
            continue;
        }
        auto gW0 = gmat(l.hidden_W[0]);
        const auto W0 = params.mat(l.hidden_W[0]);
        gW0.leftCols(cfg.d).noalias() += g_z * st.h_traj.transpose();
        const Index cw = st.circle_flat.size();
        if (cw > 0) gW0.middleCols(cfg.d, cw).noalias() += g_z * st.circle_flat.transpose();
        if (cfg.noise_dim > 0) gW0.rightCols(cfg.noise_dim).noalias() += g_z * item.noise.row(best_k);

        const VectorXd g_h = W0.leftCols(cfg.d).transpose() * g_z;
        const VectorXd g_zt = g_h.array() * (1.0 - st.h_traj.array().square());
        gmat(l.traj_W).noalias() += g_zt * item.inputs->traj.transpose();
        gvec(l.traj_b) += g_zt;

        if (cw == 0) break;
        const VectorXd g_c = W0.middleCols(cfg.d, cw).transpose() * g_z;
        const Index n_theta = cfg.circle.n_theta;
        MatrixXd g_f(n_theta, cfg.d_sc);
        for (Index j = 0; j < n_theta; ++j) g_f.row(j) = g_c.segment(j * cfg.d_sc, cfg.d_sc).transpose();

        MatrixXd g_fs = g_f;
        MatrixXd g_fp;
        if (cfg.uses_physical()) {
            if (cfg.fusion == FusionMode::hard) {
                g_fp = g_f;
            } else {
                const auto u = params.vec(l.gate_u);
                auto gu = gvec(l.gate_u);
                double& gc = grad[l.gate_c.offset];
                g_fp.resize(n_theta, cfg.d_sc);
                for (Index j = 0; j < n_theta; ++j) {
                    const double g = st.fusion.gates[j];
                    const double dz = g_f.row(j).dot(st.f_p.row(j)) * g * (1.0 - g);
                    gu.head(cfg.d_sc) += dz * st.f_s.row(j).transpose();
                    gu.tail(cfg.d_sc) += dz * st.f_p.row(j).transpose();
                    gc += dz;
                    g_fs.row(j) += dz * u.head(cfg.d_sc).transpose();
                    g_fp.row(j) = g * g_f.row(j) + dz * u.tail(cfg.d_sc).transpose();
                }
            }
        }

        auto backprop_encoder = [&](const CircleRep& rep, const Features& f, const MatrixXd& g, const Slot& W,
                                    const Slot& b) {
            auto gW = gmat(W);
            auto gb = gvec(b);
            for (Index j = 0; j < n_theta; ++j) {
                if (!rep.occupied[static_cast<std::size_t>(j)]) continue;
                const auto& row = rep.rows[static_cast<std::size_t>(j)];
                const VectorXd g_pre = (g.row(j).array() * (1.0 - f.row(j).array().square())).transpose();
                gW.noalias() += g_pre * Eigen::RowVector3d(row[0], row[1], row[2]);
                gb += g_pre;
            }
        };
        backprop_encoder(item.inputs->social, st.f_s, g_fs, l.social_W, l.social_b);
        if (cfg.uses_physical())
            backprop_encoder(item.inputs->physical, st.f_p, g_fp, l.physical_W, l.physical_b);
    }
    return best_loss;
}

double batch_loss(const PredictorParams& params, std::span<const BatchItem> batch) {
    if (batch.empty()) throw ConfigError("batch must be nonempty");
    double total = 0.0;
    for (const auto& item : batch) {
        const EncodedState st = encode_state(params, *item.inputs);
        double best = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < item.noise.rows(); ++k)
            best = std::min(best, mean_displacement(decode(params, st, item.noise.row(k).transpose()), *item.truth));
        total += best;
    }
    return total / static_cast<double>(batch.size());
}

GradientResult gradient(const PredictorParams& params, std::span<const BatchItem> batch, int jobs) {
    if (batch.empty()) throw ConfigError("batch must be nonempty");
    const std::size_t n = params.values.size();
    const std::size_t m = batch.size();
    GradientResult res;
    res.grad.assign(n, 0.0);

    std::vector<double> losses(m, 0.0);
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, m);
    if (workers == 1) {
        std::vector<double> item_grad(n);
        for (std::size_t i = 0; i < m; ++i) {
            std::fill(item_grad.begin(), item_grad.end(), 0.0);
            losses[i] = item_gradient(params, batch[i], item_grad);
            for (std::size_t p = 0; p < n; ++p) res.grad[p] += item_grad[p];
        }
    } else {
        std::vector<std::vector<double>> item_grads(m, std::vector<double>(n, 0.0));
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < m; i += workers) losses[i] = item_gradient(params, batch[i], item_grads[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < n; ++p) res.grad[p] += item_grads[i][p];
    }

    const double inv = 1.0 / static_cast<double>(m);
    for (auto& g : res.grad) g *= inv;
    for (double v : losses) res.loss += v;
    res.loss *= inv;

    for (const auto& t : params.layout.tensors)
        for (std::size_t i = 0; i < t.slot.size(); ++i)
            if (!std::isfinite(res.grad[t.slot.offset + i]))
                throw NumericError(t.group, "non-finite gradient in " + t.name);
    if (!std::isfinite(res.loss)) throw NumericError("decoder", "non-finite loss");
    return res;
}

std::vector<PreparedCase> prepare_cases(const ModelConfig& config, std::span<const SceneCase> cases) {
    std::vector<PreparedCase> out;
    out.reserve(cases.size());
    for (const auto& c : cases) {
        if (c.sample.future.size() != static_cast<std::size_t>(config.sample.t_f))
            throw ShapeError("training/evaluation samples need t_f future positions");
        out.push_back({prepare_inputs(config, c), c.sample.future, sample_key(c.sample)});
    }
    return out;
}

TrainResult train(PredictorParams init, std::span<const PreparedCase> data, std::span<const PreparedCase> val,
                  const TrainOptions& options) {
    if (data.empty()) throw ConfigError("training data is empty");
    if (options.epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (options.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(options.lr > 0.0)) throw ConfigError("train.lr must be > 0");
    if (!(options.lr_final > 0.0 && options.lr_final <= 1.0)) throw ConfigError("train.lr_final must lie in (0, 1]");

    TrainResult res{std::move(init), {}};
    const auto& cfg = res.params.config;
    const int k = cfg.k_gen;

    std::vector<BatchItem> val_items;
    for (const auto& c : val) {
        Rng rng(derive_seed(options.seed, {0x7a1, c.key}));
        BatchItem item{&c.inputs, &c.truth, Eigen::MatrixXd(k, cfg.noise_dim)};
        for (int i = 0; i < k; ++i) item.noise.row(i) = draw_noise(rng, cfg.noise_dim).transpose();
        val_items.push_back(std::move(item));
    }

    std::vector<std::size_t> order(data.size());
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        Rng rng(derive_seed(options.seed, {0xe90c, static_cast<std::uint64_t>(epoch)}));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        double lr = options.lr;
        if (options.lr_final != 1.0 && options.epochs > 1) {
            const double progress = static_cast<double>(epoch) / (options.epochs - 1);
            lr *= options.lr_final + (1.0 - options.lr_final) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
            std::vector<BatchItem> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const auto& c = data[order[i]];
                BatchItem item{&c.inputs, &c.truth, Eigen::MatrixXd(k, cfg.noise_dim)};
                for (int j = 0; j < k; ++j) item.noise.row(j) = draw_noise(rng, cfg.noise_dim).transpose();
                batch.push_back(std::move(item));
            }
            const auto g = gradient(res.params, batch, options.jobs);
            for (std::size_t p = 0; p < g.grad.size(); ++p) res.params.values[p] -= lr * g.grad[p];
            epoch_loss += g.loss * static_cast<double>(batch.size());
        }
        EpochLoss e{epoch, epoch_loss / static_cast<double>(data.size()), std::nullopt};
        if (!val_items.empty()) e.val = batch_loss(res.params, val_items);
        res.curve.push_back(e);
    }
    return res;
}

// ---------------------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'S', 'C', 'P', 'P', 'A', 'R', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw ParseError(0, "truncated parameter file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
}  // namespace

void save_params(const std::filesystem::path& path, const PredictorParams& params, std::uint64_t seed) {
    nlohmann::json header;
    header["format"] = 1;
    header["seed"] = seed;
    header["config"] = to_json(params.config);
    header["total"] = params.layout.total;
    auto& tensors = header["tensors"] = nlohmann::json::array();
    for (const auto& t : params.layout.tensors)
        tensors.push_back({{"name", t.name}, {"group", t.group}, {"rows", t.slot.rows}, {"cols", t.slot.cols},
                           {"offset", t.slot.offset}});
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw NotFoundError("cannot write parameter file '" + path.string() + "'");
    out.write(kMagic, sizeof kMagic);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (double v : params.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

ModelFile load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open parameter file '" + path.string() + "'");
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) throw ParseError(0, "not a parameter file");
    const std::uint64_t len = get_u64(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const auto header = nlohmann::json::parse(text);

    ModelFile mf;
    mf.seed = header.at("seed").get<std::uint64_t>();
    mf.params = zero_params(model_config_from_json(header.at("config")));
    if (header.at("total").get<std::size_t>() != mf.params.layout.total)
        throw ShapeError("parameter file size does not match its configuration");
    for (auto& v : mf.params.values) v = std::bit_cast<double>(get_u64(in));
    return mf;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const EpochLoss> curve) {
    std::ofstream out(path);
    if (!out) throw NotFoundError("cannot write '" + path.string() + "'");
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& e : curve) {
        if (e.val)
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", e.epoch, e.train, *e.val);
        else
            std::snprintf(buf, sizeof buf, "%d,%.17g,\n", e.epoch, e.train);
        out << buf;
    }
}

}  // namespace scplus
