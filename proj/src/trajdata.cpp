#include "scplus/trajdata.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "scplus/error.hpp"
#include "scplus/random.hpp"

namespace scplus {

void SampleSpec::validate() const {
    if (t_h < 2) throw ConfigError("sample.t_h must be >= 2");
    if (t_f < 1) throw ConfigError("sample.t_f must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("sample.dt must be > 0");
}

Unit parse_unit(std::string_view name) {
    if (name == "meters") return Unit::meters;
    if (name == "pixels") return Unit::pixels;
    if (name == "inches") return Unit::inches;
    throw ConfigError("unknown unit '" + std::string(name) + "'");
}

std::string_view to_string(Unit unit) noexcept {
    switch (unit) {
        case Unit::meters: return "meters";
        case Unit::pixels: return "pixels";
        case Unit::inches: return "inches";
    }
    return "meters";
}

namespace {

bool parse_id(std::string_view tok, std::int64_t& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec == std::errc() && ptr == tok.data() + tok.size()) return true;
    // Some exports write ids as "780.0".
    double v = 0.0;
    auto [p2, e2] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (e2 != std::errc() || p2 != tok.data() + tok.size()) return false;
    if (v != std::floor(v) || std::abs(v) > 9e15) return false;
    out = static_cast<std::int64_t>(v);
    return true;
}

bool parse_coord(std::string_view tok, double& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

struct Fnv1a {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    }
    template <class T>
    void value(const T& v) { bytes(&v, sizeof(T)); }
};

}  // namespace

SceneClip parse_annotations(std::istream& in, Unit unit, std::string clip_id) {
    SceneClip clip{std::move(clip_id), unit, {}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream fields(line);
        std::string tok[5];
        int n = 0;
        while (n < 5 && fields >> tok[n]) ++n;
        if (n != 4) throw ParseError(lineno, "expected 'frame_id agent_id x y', got " + std::to_string(n) + " fields");

        Record r;
        if (!parse_id(tok[0], r.frame_id)) throw ParseError(lineno, "bad frame_id '" + tok[0] + "'");
        if (!parse_id(tok[1], r.agent_id)) throw ParseError(lineno, "bad agent_id '" + tok[1] + "'");
        if (!parse_coord(tok[2], r.x)) throw ParseError(lineno, "bad x '" + tok[2] + "'");
        if (!parse_coord(tok[3], r.y)) throw ParseError(lineno, "bad y '" + tok[3] + "'");
        clip.records.push_back(r);
    }

    std::stable_sort(clip.records.begin(), clip.records.end(), [](const Record& a, const Record& b) {
        return std::tie(a.frame_id, a.agent_id) < std::tie(b.frame_id, b.agent_id);
    });
    for (std::size_t i = 1; i < clip.records.size(); ++i) {
        const auto& a = clip.records[i - 1];
        const auto& b = clip.records[i];
        if (a.frame_id == b.frame_id && a.agent_id == b.agent_id) {
            throw DuplicateRecordError("duplicate record for frame " + std::to_string(a.frame_id) + ", agent " +
                                       std::to_string(a.agent_id) + " in clip '" + clip.clip_id + "'");
        }
    }
    return clip;
}

SceneClip load_annotations(const std::filesystem::path& path, Unit unit) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open annotation file '" + path.string() + "'");
    return parse_annotations(in, unit, path.stem().string());
}

void write_annotations(std::ostream& out, const SceneClip& clip) {
    char buf[128];
    for (const auto& r : clip.records) {
        std::snprintf(buf, sizeof buf, "%lld %lld %.17g %.17g\n", static_cast<long long>(r.frame_id),
                      static_cast<long long>(r.agent_id), r.x, r.y);
        out << buf;
    }
}

BuildResult build_samples(const SceneClip& clip, const SampleSpec& spec, int stride) {
    spec.validate();
    if (stride < 1) throw ConfigError("stride must be >= 1");

    // Sort a private copy so callers may pass records in any order.
    std::vector<Record> records = clip.records;
    std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
        return std::tie(a.frame_id, a.agent_id) < std::tie(b.frame_id, b.agent_id);
    });

    std::vector<std::int64_t> grid;
    for (const auto& r : records)
        if (grid.empty() || grid.back() != r.frame_id) grid.push_back(r.frame_id);
    auto grid_index = [&](std::int64_t frame) {
        return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), frame) - grid.begin());
    };

    struct Obs {
        std::size_t g;
        Vec2 p;
    };
    std::map<std::int64_t, std::vector<Obs>> tracks;
    for (const auto& r : records) tracks[r.agent_id].push_back({grid_index(r.frame_id), Vec2(r.x, r.y)});

    const auto t_h = static_cast<std::size_t>(spec.t_h);
    const auto window = static_cast<std::size_t>(spec.window());

    BuildResult out;
    for (const auto& [agent, track] : tracks) {
        std::size_t produced = 0;
        for (std::size_t i = 0; i + window <= track.size(); i += static_cast<std::size_t>(stride)) {
            const std::size_t g0 = track[i].g;
            if (track[i + window - 1].g - g0 != window - 1) continue;

            TrajectorySample s;
            s.clip_id = clip.clip_id;
            s.target_id = agent;
            s.start_frame = grid[g0];
            const Vec2 anchor = track[i + t_h - 1].p;
            s.origin_offset = anchor;
            for (std::size_t t = 0; t < window; ++t) {
                Vec2 p = track[i + t].p - anchor;
                (t < t_h ? s.observed : s.future).push_back(p);
            }

            for (const auto& [other, otrack] : tracks) {
                if (other == agent) continue;
                auto lo = std::lower_bound(otrack.begin(), otrack.end(), g0,
                                           [](const Obs& o, std::size_t g) { return o.g < g; });
                std::vector<const Obs*> inside;
                for (auto it = lo; it != otrack.end() && it->g < g0 + t_h; ++it) inside.push_back(&*it);
                if (inside.empty()) continue;

                Neighbor nb;
                nb.agent_id = other;
                for (std::size_t t = 0; t < t_h; ++t) {
                    const std::size_t g = g0 + t;
                    // Hold the nearest available observation; ties resolve to the earlier one.
                    const Obs* best = inside.front();
                    std::size_t best_gap = g > best->g ? g - best->g : best->g - g;
                    for (const Obs* o : inside) {
                        std::size_t gap = g > o->g ? g - o->g : o->g - g;
                        if (gap < best_gap) {
                            best = o;
                            best_gap = gap;
                        }
                    }
                    nb.observed.push_back(best->p - anchor);
                }
                s.neighbors.push_back(std::move(nb));
            }
            out.samples.push_back(std::move(s));
            ++produced;
        }
        if (produced == 0) ++out.skipped_agents;
    }
    return out;
}

std::uint64_t sample_key(const TrajectorySample& sample) {
    Fnv1a h;
    h.bytes(sample.clip_id.data(), sample.clip_id.size());
    h.value(sample.target_id);
    h.value(sample.start_frame);
    auto add = [&](const Vec2& p) {
        h.value(std::bit_cast<std::uint64_t>(p.x()));
        h.value(std::bit_cast<std::uint64_t>(p.y()));
    };
    for (const auto& p : sample.observed) add(p);
    add(sample.origin_offset);
    return h.h;
}

std::vector<std::size_t> nearest_neighbors(const TrajectorySample& sample, std::size_t k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    std::vector<std::size_t> idx(sample.neighbors.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (idx.empty()) return idx;

    const Vec2 target = sample.observed.back();
    std::vector<double> d2(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) d2[i] = (sample.neighbors[i].observed.back() - target).squaredNorm();

    auto cmp = [&](std::size_t a, std::size_t b) {
        if (d2[a] != d2[b]) return d2[a] < d2[b];
        return sample.neighbors[a].agent_id < sample.neighbors[b].agent_id;
    };
    const std::size_t keep = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), cmp);
    idx.resize(keep);
    return idx;
}

SplitPlan leave_one_out_splits(std::span<const SceneClip> clips, std::string_view held_out,
                               std::span<const std::string> val_ids) {
    SplitPlan plan;
    bool found = false;
    for (const auto& c : clips) {
        if (c.clip_id == held_out) {
            found = true;
            plan.test.push_back(c.clip_id);
        } else {
            plan.train.push_back(c.clip_id);
        }
    }
    if (!found) throw NotFoundError("held-out clip '" + std::string(held_out) + "' not among inputs");

    for (const auto& v : val_ids) {
        auto it = std::find(plan.train.begin(), plan.train.end(), v);
        if (it == plan.train.end()) throw NotFoundError("validation clip '" + v + "' is not a training clip");
        plan.val.push_back(v);
        plan.train.erase(it);
    }
    if (plan.train.empty()) plan.warnings.push_back("training split is empty");
    return plan;
}

std::vector<TrajectorySample> random_subsample(std::span<const TrajectorySample> samples, std::size_t count,
                                               std::uint64_t seed) {
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (count < idx.size()) {
        Rng rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(count);
        std::sort(idx.begin(), idx.end());
    }
    std::vector<TrajectorySample> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(samples[i]);
    return out;
}

}  // namespace scplus
