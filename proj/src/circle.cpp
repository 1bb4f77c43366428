#include "scplus/circle.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <ostream>

#include "scplus/error.hpp"

namespace scplus {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBlocked = 0.5;
}  // namespace

void CircleSpec::validate() const {
    if (n_theta < 1) throw ConfigError("circle.n_theta must be >= 1");
    if (!(r_min > 0.0)) throw ConfigError("circle.r_min must be > 0");
    if (n_ray < 1) throw ConfigError("circle.n_ray must be >= 1");
    if (n_rad < 2) throw ConfigError("circle.n_rad must be >= 2");
    if (k_neighbors < 1) throw ConfigError("circle.k_neighbors must be >= 1");
}

FusionMode parse_fusion_mode(std::string_view name) {
    if (name == "hard") return FusionMode::hard;
    if (name == "adaptive") return FusionMode::adaptive;
    throw ConfigError("unknown fusion mode '" + std::string(name) + "'");
}

std::string_view to_string(FusionMode mode) noexcept { return mode == FusionMode::hard ? "hard" : "adaptive"; }

double wrap_angle(double angle) noexcept {
    double a = std::fmod(angle, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

int partition_index(double angle, int n_theta) noexcept {
    const int j = static_cast<int>(std::floor(wrap_angle(angle) * n_theta / kTwoPi));
    return std::clamp(j, 0, n_theta - 1);
}

SocialCircleRep social_circle(const TrajectorySample& sample, std::span<const std::size_t> neighbor_ids,
                              const CircleSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(spec.n_theta);
    SocialCircleRep rep;
    rep.rows.assign(n, MetaRow{0.0, 0.0, 0.0});
    rep.occupied.assign(n, false);
    rep.counts.assign(n, 0);

    std::vector<double> vel(n, 0.0), dist(n, 0.0), sn(n, 0.0), cs(n, 0.0);
    const Vec2 target = sample.observed.back();
    for (std::size_t id : neighbor_ids) {
        const auto& obs = sample.neighbors.at(id).observed;
        const Vec2 rel = obs.back() - target;
        const auto j = static_cast<std::size_t>(partition_index(std::atan2(rel.y(), rel.x()), spec.n_theta));

        double speed = 0.0;
        for (std::size_t t = 1; t < obs.size(); ++t) speed += (obs[t] - obs[t - 1]).norm();
        if (obs.size() > 1) speed /= static_cast<double>(obs.size() - 1);

        const Vec2 step = obs.size() > 1 ? Vec2(obs.back() - obs[obs.size() - 2]) : Vec2::Zero();
        const double heading = std::atan2(step.y(), step.x());

        vel[j] += speed;
        dist[j] += rel.norm();
        sn[j] += std::sin(heading);
        cs[j] += std::cos(heading);
        ++rep.counts[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (rep.counts[j] == 0) continue;
        const double c = rep.counts[j];
        rep.rows[j] = {vel[j] / c, dist[j] / c, wrap_angle(std::atan2(sn[j], cs[j]))};
        rep.occupied[j] = true;
    }
    return rep;
}

double scan_radius(const TrajectorySample& sample, const CircleSpec& spec) {
    const double moved = (sample.observed.back() - sample.observed.front()).norm();
    return std::max(spec.r_min, 2.0 * moved);
}

PhysicalCircleRep physical_circle(const TrajectorySample& sample, const SegmentationMap* map,
                                  const AffineCalib& calib, const CircleSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(spec.n_theta);
    PhysicalCircleRep rep;
    rep.radius = scan_radius(sample, spec);
    rep.rows.assign(n, MetaRow{0.0, rep.radius, 0.0});
    rep.occupied.assign(n, false);
    if (map == nullptr) return rep;

    const Vec2 anchor = sample.observed.back() + sample.origin_offset;
    const double width = kTwoPi / spec.n_theta;
    const double samples = static_cast<double>(spec.n_ray) * spec.n_rad;
    for (std::size_t j = 0; j < n; ++j) {
        double mass = 0.0, moment = 0.0, clearance = rep.radius;
        for (int a = 0; a < spec.n_ray; ++a) {
            const double offset = width * (a + 0.5) / spec.n_ray;
            const double theta = width * static_cast<double>(j) + offset;
            const Vec2 dir(std::cos(theta), std::sin(theta));
            for (int b = 0; b < spec.n_rad; ++b) {
                const double r = rep.radius * (b + 1) / spec.n_rad;
                const double w = walkability(*map, anchor + dir * r, calib);
                mass += w;
                moment += w * offset;
                if (w >= kBlocked) clearance = std::min(clearance, r);
            }
        }
        if (mass > 0.0) {
            rep.rows[j] = {mass / samples, clearance, moment / mass};
            rep.occupied[j] = true;
        }
    }
    return rep;
}

Features encode(const CircleRep& rep, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                const Eigen::Ref<const Eigen::VectorXd>& bias) {
    if (weights.cols() != 3 || weights.rows() != bias.size())
        throw ShapeError("circle encoder expects weights d_sc x 3 and bias d_sc");
    Features out = Features::Zero(static_cast<Eigen::Index>(rep.size()), weights.rows());
    for (std::size_t j = 0; j < rep.size(); ++j) {
        if (!rep.occupied[j]) continue;
        const Eigen::Vector3d row(rep.rows[j][0], rep.rows[j][1], rep.rows[j][2]);
        out.row(static_cast<Eigen::Index>(j)) = (weights * row + bias).array().tanh().transpose();
    }
    return out;
}

FusionResult fuse(const Features& f_s, const Features& f_p, FusionMode mode,
                  const Eigen::Ref<const Eigen::VectorXd>& gate_u, double gate_c) {
    if (f_s.rows() != f_p.rows() || f_s.cols() != f_p.cols())
        throw ShapeError("fuse expects social and physical features of equal shape");
    FusionResult out;
    if (mode == FusionMode::hard) {
        out.fused = f_s + f_p;
        return out;
    }
    const Eigen::Index d = f_s.cols();
    if (gate_u.size() != 2 * d) throw ShapeError("adaptive gate expects 2*d_sc weights");
    out.gates.resize(f_s.rows());
    out.fused.resize(f_s.rows(), d);
    for (Eigen::Index j = 0; j < f_s.rows(); ++j) {
        const double z = gate_u.head(d).dot(f_s.row(j)) + gate_u.tail(d).dot(f_p.row(j)) + gate_c;
        const double g = 1.0 / (1.0 + std::exp(-z));
        out.gates[j] = g;
        out.fused.row(j) = f_s.row(j) + g * f_p.row(j);
    }
    return out;
}

int backbone_length(int n_theta, int t_h, bool padded_backbone) {
    if (n_theta > t_h && !padded_backbone)
        throw ConfigError("n_theta (" + std::to_string(n_theta) + ") exceeds t_h (" + std::to_string(t_h) +
                          ") and the backbone is not configured for padded trajectory features");
    return std::max(n_theta, t_h);
}

Features align_to_backbone(const Features& fused, int steps, bool padded_backbone) {
    const int n = static_cast<int>(fused.rows());
    const int len = backbone_length(n, steps, padded_backbone);
    if (len == n) return fused;
    Features out = Features::Zero(len, fused.cols());
    out.topRows(n) = fused;
    return out;
}

void write_rep_csv(std::ostream& out, const CircleRep& rep, std::string_view kind) {
    const bool social = kind == "social";
    out << "partition," << (social ? "velocity,distance,direction" : "obstruction,clearance,bearing") << ",occupied\n";
    char buf[160];
    for (std::size_t j = 0; j < rep.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d\n", j, rep.rows[j][0], rep.rows[j][1],
                      rep.rows[j][2], rep.occupied[j] ? 1 : 0);
        out << buf;
    }
}

}  // namespace scplus
