#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "scplus/predictor.hpp"
#include "scplus/random.hpp"
#include "scplus/scene.hpp"

namespace scplus::testing {

/// A random scene with neighbors around the target and a few blocked cells near it.
inline SceneCase random_scene(Rng& rng, const SampleSpec& spec, int n_neighbors) {
    std::uniform_real_distribution<double> u(-1, 1);
    SceneCase c;
    const Vec2 v(0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng));
    for (int t = 0; t < spec.t_h; ++t) c.sample.observed.push_back(v * (t - spec.t_h + 1) + 0.05 * Vec2(u(rng), u(rng)));
    c.sample.observed.back() = Vec2::Zero();
    for (int t = 1; t <= spec.t_f; ++t) c.sample.future.push_back(v * t + 0.3 * Vec2(u(rng), u(rng)) * t / spec.t_f);
    for (int i = 0; i < n_neighbors; ++i) {
        Neighbor n{i + 1, {}};
        const Vec2 end(4 * u(rng), 4 * u(rng)), nv(u(rng), u(rng));
        for (int t = 0; t < spec.t_h; ++t) n.observed.push_back(end + nv * (t - spec.t_h + 1));
        c.sample.neighbors.push_back(n);
    }
    c.sample.origin_offset = Vec2(10, 10);
    auto map = std::make_shared<SegmentationMap>(100, 100, 0.0);
    std::uniform_int_distribution<int> cell(55, 90);
    for (int b = 0; b < 3; ++b) {
        const int r = cell(rng), col = cell(rng);
        for (int dr = 0; dr < 8; ++dr)
            for (int dc = 0; dc < 8; ++dc)
                if (r + dr < 100 && col + dc < 100) map->at(r + dr, col + dc) = b == 2 ? 0.5 : 1.0;
    }
    c.map = map;
    c.calib.w = Vec2(5, 5);
    return c;
}

/// Initialized parameters with every bias and the gate offset moved off zero.
inline PredictorParams random_params(const ModelConfig& config, Rng& rng) {
    auto p = init_params(config, rng());
    std::normal_distribution<double> n(0.0, 0.3);
    for (const auto& t : p.layout.tensors)
        if (t.slot.cols == 1)
            for (std::size_t i = 0; i < t.slot.size(); ++i) p.values[t.slot.offset + i] += n(rng);
    return p;
}

/// Noise rows whose best-of-k winner is separated from the runner-up by at least `gap`,
/// so finite differences do not cross an argmin switch.
inline Eigen::MatrixXd separated_noise(const PredictorParams& params, const PreparedInputs& in, const Path& truth,
                                       int k, Rng& rng, double gap) {
    for (;;) {
        Eigen::MatrixXd z(k, params.config.noise_dim);
        for (int i = 0; i < k; ++i) z.row(i) = draw_noise(rng, params.config.noise_dim).transpose();
        std::vector<double> losses;
        for (int i = 0; i < k; ++i) losses.push_back(mean_displacement(forward(params, in, z.row(i).transpose()), truth));
        std::sort(losses.begin(), losses.end());
        if (k == 1 || losses[1] - losses[0] > gap) return z;
    }
}

/// Largest relative difference between the analytic gradient and central differences,
/// with relative error measured against max(|analytic|, |numeric|, floor).
inline double max_gradient_error(PredictorParams params, const BatchItem& item, double h = 1e-5,
                                 double floor = 1e-3) {
    std::vector<double> grad(params.values.size(), 0.0);
    item_gradient(params, item, grad);
    const std::span<const BatchItem> one(&item, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double keep = params.values[i];
        params.values[i] = keep + h;
        const double up = batch_loss(params, one);
        params.values[i] = keep - h;
        const double down = batch_loss(params, one);
        params.values[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(grad[i]), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(grad[i] - numeric) / scale);
    }
    return worst;
}

/// Small model used where gradients or many trainings are needed.
inline ModelConfig small_config(Variant variant, FusionMode fusion) {
    ModelConfig c;
    c.d = 8;
    c.d_sc = 4;
    c.k_gen = 5;
    c.noise_dim = 3;
    c.layers = 2;
    c.variant = variant;
    c.fusion = fusion;
    return c;
}

}  // namespace scplus::testing
