#include "scplus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "scplus/error.hpp"
#include "scplus/random.hpp"

namespace scplus {

ScenarioKind parse_scenario_kind(std::string_view name) {
    if (name == "crossing") return ScenarioKind::crossing;
    if (name == "overtake") return ScenarioKind::overtake;
    if (name == "obstacle") return ScenarioKind::obstacle;
    if (name == "isolated") return ScenarioKind::isolated;
    throw ConfigError("unknown scenario kind '" + std::string(name) + "'");
}

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
        case ScenarioKind::crossing: return "crossing";
        case ScenarioKind::overtake: return "overtake";
        case ScenarioKind::obstacle: return "obstacle";
        case ScenarioKind::isolated: return "isolated";
    }
    return "isolated";
}

namespace {

constexpr std::int64_t kFrameStep = 10;

Vec2 unit(double a) { return {std::cos(a), std::sin(a)}; }
Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

struct Rect {
    Vec2 lo, hi;

    [[nodiscard]] Rect inflated(double m) const { return {lo.array() - m, hi.array() + m}; }
    [[nodiscard]] bool strictly_inside(const Vec2& p) const {
        return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y();
    }
    [[nodiscard]] std::array<Vec2, 4> corners() const {
        return {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
    }
};

// Parameter interval of segment a->b inside the closed rect (Liang-Barsky); empty if t0 > t1.
std::pair<double, double> clip_segment(const Vec2& a, const Vec2& b, const Rect& r) {
    double t0 = 0.0, t1 = 1.0;
    const Vec2 d = b - a;
    for (int axis = 0; axis < 2; ++axis) {
        if (d[axis] == 0.0) {
            if (a[axis] < r.lo[axis] || a[axis] > r.hi[axis]) return {1.0, 0.0};
            continue;
        }
        double ta = (r.lo[axis] - a[axis]) / d[axis];
        double tb = (r.hi[axis] - a[axis]) / d[axis];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return {t0, t1};
}

bool crosses_interior(const Vec2& a, const Vec2& b, const Rect& r) {
    auto [t0, t1] = clip_segment(a, b, r);
    if (!(t1 - t0 > 1e-9)) return false;
    return r.strictly_inside(a + (b - a) * (0.5 * (t0 + t1)));
}

// Shortest polyline from a to b avoiding the interior of `r`, via its (slightly pushed out) corners.
std::vector<Vec2> detour(const Vec2& a, const Vec2& b, const Rect& r) {
    const auto cs = r.inflated(1e-6).corners();
    std::vector<Vec2> nodes{a, b, cs[0], cs[1], cs[2], cs[3]};
    const std::size_t n = nodes.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    std::vector<std::size_t> prev(n, n);
    std::vector<bool> done(n, false);
    dist[0] = 0.0;
    for (std::size_t iter = 0; iter < n; ++iter) {
        std::size_t u = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i] && (u == n || dist[i] < dist[u])) u = i;
        if (u == n || dist[u] == inf) break;
        done[u] = true;
        for (std::size_t v = 0; v < n; ++v) {
            if (done[v] || crosses_interior(nodes[u], nodes[v], r)) continue;
            const double nd = dist[u] + (nodes[v] - nodes[u]).norm();
            if (nd < dist[v]) {
                dist[v] = nd;
                prev[v] = u;
            }
        }
    }
    if (prev[1] == n) return {a, b};
    std::vector<Vec2> path;
    for (std::size_t v = 1;; v = prev[v]) {
        path.push_back(nodes[v]);
        if (v == 0) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

// Positions at arc lengths 0, v, 2v, ... along a polyline; extrapolates past the end.
std::vector<Vec2> walk(const std::vector<Vec2>& poly, double speed, int steps) {
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
        double s = speed * t;
        std::size_t seg = 0;
        while (seg + 2 < poly.size()) {
            const double len = (poly[seg + 1] - poly[seg]).norm();
            if (s <= len) break;
            s -= len;
            ++seg;
        }
        const Vec2 d = poly[seg + 1] - poly[seg];
        const double len = d.norm();
        out.push_back(len > 0.0 ? Vec2(poly[seg] + d * (s / len)) : poly[seg]);
    }
    return out;
}

// Two-agent social-force rollout: preferred velocity plus exponential repulsion.
std::array<std::vector<Vec2>, 2> interact(std::array<Vec2, 2> pos, const std::array<Vec2, 2>& pref, int steps,
                                          const SyntheticConfig& cfg) {
    std::array<std::vector<Vec2>, 2> out;
    for (int t = 0; t < steps; ++t) {
        out[0].push_back(pos[0]);
        out[1].push_back(pos[1]);
        std::array<Vec2, 2> next;
        for (int i = 0; i < 2; ++i) {
            const Vec2 away = pos[i] - pos[1 - i];
            const double d = std::max(away.norm(), 1e-6);
            const Vec2 force = cfg.repulsion * std::exp(-d / cfg.repulsion_range) * away / d;
            next[i] = pos[i] + pref[i] + force;
        }
        pos = next;
    }
    return out;
}

class Generator {
public:
    Generator(ScenarioKind kind, std::uint64_t seed, const SampleSpec& spec, const SyntheticConfig& cfg)
        : kind_(kind), spec_(spec), cfg_(cfg), rng_(derive_seed(seed, {static_cast<std::uint64_t>(kind)})) {}

    SyntheticSet run(std::size_t n) {
        SyntheticSet set;
        set.kind = kind_;
        set.clip.clip_id = "synthetic_" + std::string(to_string(kind_));
        set.clip.unit = Unit::meters;
        set.calib.w = Vec2(cfg_.pixels_per_unit, cfg_.pixels_per_unit);
        set.calib.b = Vec2::Zero();

        const int raw = static_cast<int>(std::lround(cfg_.world * cfg_.pixels_per_unit));
        Grid grid(raw, raw, 0.0);
        if (kind_ == ScenarioKind::obstacle) {
            const Vec2 c = Vec2::Constant(cfg_.world / 2) + Vec2(uniform(-2, 2), uniform(-2, 2));
            const Vec2 half(uniform(2.0, 3.5), uniform(2.0, 3.5));
            obstacle_ = Rect{c - half, c + half};
            for (int r = 0; r < raw; ++r)
                for (int col = 0; col < raw; ++col) {
                    const Vec2 p((col + 0.5) / cfg_.pixels_per_unit, (r + 0.5) / cfg_.pixels_per_unit);
                    if (p.x() >= obstacle_.lo.x() && p.x() <= obstacle_.hi.x() && p.y() >= obstacle_.lo.y() &&
                        p.y() <= obstacle_.hi.y())
                        grid.at(r, col) = 1.0;
                }
        }
        set.map = pool_map(grid, cfg_.map_cells, cfg_.map_cells);

        const std::size_t per_episode =
            (kind_ == ScenarioKind::crossing || kind_ == ScenarioKind::overtake) ? 2 : 1;
        const std::size_t episodes = (n + per_episode - 1) / per_episode;
        for (std::size_t e = 0; e < episodes; ++e) {
            std::vector<std::vector<Vec2>> tracks;
            for (int attempt = 0;; ++attempt) {
                tracks = episode();
                if (kind_ != ScenarioKind::obstacle || walkable(tracks[0], set)) break;
                if (attempt > 100) throw Error("synthetic obstacle generator could not place a walkable path");
            }
            const std::int64_t frame0 = static_cast<std::int64_t>(e) * (spec_.window() + 5) * kFrameStep;
            for (std::size_t a = 0; a < tracks.size(); ++a) {
                const std::int64_t agent = static_cast<std::int64_t>(e * 2 + a + 1);
                for (std::size_t t = 0; t < tracks[a].size(); ++t)
                    set.clip.records.push_back(
                        {frame0 + static_cast<std::int64_t>(t) * kFrameStep, agent, tracks[a][t].x(), tracks[a][t].y()});
            }
        }
        std::sort(set.clip.records.begin(), set.clip.records.end(), [](const Record& a, const Record& b) {
            return std::tie(a.frame_id, a.agent_id) < std::tie(b.frame_id, b.agent_id);
        });

        auto built = build_samples(set.clip, spec_, 1);
        built.samples.resize(std::min(n, built.samples.size()));
        set.samples = std::move(built.samples);
        return set;
    }

private:
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    double speed() { return uniform(cfg_.speed_min, cfg_.speed_max); }
    double heading() { return cfg_.heading + uniform(-cfg_.heading_spread, cfg_.heading_spread); }

    void add_jitter(std::vector<Vec2>& track) {
        for (auto& p : track) p += Vec2(normal(), normal()) * cfg_.jitter;
    }

    [[nodiscard]] bool walkable(const std::vector<Vec2>& track, const SyntheticSet& set) const {
        for (std::size_t t = static_cast<std::size_t>(spec_.t_h); t < track.size(); ++t)
            if (walkability(set.map, track[t], set.calib) >= 0.5) return false;
        return true;
    }

    std::vector<std::vector<Vec2>> episode() {
        const int steps = spec_.window();
        const double th = spec_.t_h;
        const Vec2 center = Vec2::Constant(cfg_.world / 2);
        switch (kind_) {
            case ScenarioKind::isolated: {
                const Vec2 dir = unit(heading());
                const double v = speed();
                const Vec2 start = center + Vec2(uniform(-4, 4), uniform(-4, 4)) - dir * v * th;
                std::vector<Vec2> track;
                for (int t = 0; t < steps; ++t) track.push_back(start + dir * v * t);
                add_jitter(track);
                return {track};
            }
            case ScenarioKind::crossing: {
                const double ha = heading();
                const double hb = ha + (uniform(0, 1) < 0.5 ? 1.0 : -1.0) * std::numbers::pi / 2 + uniform(-0.2, 0.2);
                const double va = speed(), vb = speed();
                const Vec2 meet = center + Vec2(uniform(-4, 4), uniform(-4, 4));
                const double t_meet = th + uniform(1.0, 5.0);
                const double lag = uniform(-2.5, 2.5);
                const std::array<Vec2, 2> pref{unit(ha) * va, unit(hb) * vb};
                const std::array<Vec2, 2> start{meet - pref[0] * t_meet, meet - pref[1] * (t_meet + lag)};
                auto [a, b] = interact(start, pref, steps, cfg_);
                add_jitter(a);
                add_jitter(b);
                return {a, b};
            }
            case ScenarioKind::overtake: {
                const Vec2 dir = unit(heading());
                const double slow = uniform(cfg_.speed_min, 1.1);
                const double fast = uniform(1.3, cfg_.speed_max);
                const double lateral = uniform(0.3, 1.2) * (uniform(0, 1) < 0.5 ? 1.0 : -1.0);
                const double t_catch = th + uniform(0.0, 6.0);
                const Vec2 base = center + Vec2(uniform(-4, 4), uniform(-4, 4)) - dir * slow * t_catch;
                const std::array<Vec2, 2> start{base - dir * (fast - slow) * t_catch + perp(dir) * lateral, base};
                auto [a, b] = interact(start, {dir * fast, dir * slow}, steps, cfg_);
                add_jitter(a);
                add_jitter(b);
                return {a, b};
            }
            case ScenarioKind::obstacle: {
                const Rect keep_out = obstacle_.inflated(cfg_.obstacle_margin);
                for (;;) {
                    const Vec2 dir = unit(heading());
                    const double v = speed();
                    const Vec2 oc = (obstacle_.lo + obstacle_.hi) / 2;
                    const double reach = (obstacle_.hi - obstacle_.lo).norm() / 2 + cfg_.obstacle_margin + 1.5;
                    const double lateral = uniform(-reach, reach);
                    // Point on the approach line level with the obstacle center.
                    const Vec2 level = oc + perp(dir) * lateral;
                    const Vec2 far_goal = level + dir * (v * steps + 20.0);
                    const Vec2 back = level - dir * (v * steps + 20.0);
                    auto [t0, t1] = clip_segment(back, far_goal, keep_out);
                    std::vector<Vec2> poly;
                    Vec2 start;
                    if (t1 > t0) {
                        const Vec2 entry = back + (far_goal - back) * t0;
                        const Vec2 trigger = entry - dir * uniform(1.0, 3.0);
                        start = trigger - dir * v * (th + uniform(0.0, 3.0));
                        poly = detour(trigger, far_goal, keep_out);
                        poly.insert(poly.begin(), start);
                    } else {
                        start = level - dir * v * (th + uniform(2.0, 6.0));
                        poly = {start, far_goal};
                    }
                    if (keep_out.strictly_inside(start)) continue;
                    std::vector<Vec2> track = walk(poly, v, steps);
                    add_jitter(track);
                    return {track};
                }
            }
        }
        return {};
    }

    ScenarioKind kind_;
    SampleSpec spec_;
    SyntheticConfig cfg_;
    Rng rng_;
    Rect obstacle_{};
};

}  // namespace

SyntheticSet generate_synthetic(ScenarioKind kind, std::size_t n, std::uint64_t seed, const SampleSpec& spec,
                                const SyntheticConfig& cfg) {
    spec.validate();
    if (n < 1) throw ConfigError("synthetic sample count must be >= 1");
    return Generator(kind, seed, spec, cfg).run(n);
}

std::vector<SceneCase> to_cases(const SyntheticSet& set) {
    auto map = std::make_shared<const SegmentationMap>(set.map);
    std::vector<SceneCase> out;
    out.reserve(set.samples.size());
    for (const auto& s : set.samples) out.push_back({s, map, set.calib});
    return out;
}

}  // namespace scplus
