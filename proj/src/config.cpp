#include "scplus/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "scplus/error.hpp"

namespace scplus {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
        return v.substr(1, v.size() - 2);
    return v;
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

class Reader {
public:
    Reader(const KeyValues& kv, std::filesystem::path base) : kv_(kv), base_(std::move(base)) {}

    const std::string& raw(const std::string& key) const { return kv_.at(key); }

    template <class T>
    T number(const std::string& key) const {
        const std::string& v = raw(key);
        T out{};
        if constexpr (std::is_floating_point_v<T>) {
            try {
                std::size_t used = 0;
                out = std::stod(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                fail(key, "expected a number, got '" + v + "'");
            }
        } else {
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc() || p != v.data() + v.size()) fail(key, "expected an integer, got '" + v + "'");
        }
        return out;
    }

    bool boolean(const std::string& key) const {
        const std::string& v = raw(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        fail(key, "expected true or false, got '" + v + "'");
    }

    std::optional<std::filesystem::path> path(const std::string& key, bool must_exist = true) const {
        const std::string& v = raw(key);
        if (v.empty()) return std::nullopt;
        std::filesystem::path p(v);
        if (p.is_relative() && !base_.empty()) p = base_ / p;
        if (must_exist && !std::filesystem::exists(p)) fail(key, "file '" + p.string() + "' does not exist");
        return p;
    }

    template <class F>
    auto with_key(const std::string& key, F&& f) const {
        try {
            return f(raw(key));
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

    [[noreturn]] static void fail(const std::string& key, const std::string& msg) {
        throw ConfigError("config key '" + key + "': " + msg);
    }

private:
    const KeyValues& kv_;
    std::filesystem::path base_;
};

}  // namespace

KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3) throw ParseError(line_no, "malformed section header");
            section = trim(std::string_view(body).substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ParseError(line_no, "empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) throw ParseError(line_no, "key '" + full + "' given twice");
        out[full] = unquote(trim(std::string_view(body).substr(eq + 1)));
    }
    return out;
}

const KeyValues& default_entries() {
    static const KeyValues defaults = {
        {"data.source", "synthetic"},
        {"data.synthetic", "crossing:250, obstacle:250"},
        {"data.annotations", ""},
        {"data.unit", "meters"},
        {"data.map", ""},
        {"data.calib", "1, 1, 0, 0"},
        {"data.calib_csv", ""},
        {"data.map_cells", "100"},
        {"data.held_out", ""},
        {"data.test_fraction", "0.2"},
        {"data.stride", "1"},
        {"sample.t_h", "8"},
        {"sample.t_f", "12"},
        {"sample.dt", "0.4"},
        {"circle.n_theta", "8"},
        {"circle.r_min", "1"},
        {"circle.n_ray", "4"},
        {"circle.n_rad", "8"},
        {"circle.k_neighbors", "50"},
        {"model.d", "32"},
        {"model.d_sc", "16"},
        {"model.k_gen", "20"},
        {"model.noise_dim", "8"},
        {"model.layers", "2"},
        {"model.variant", "social_plus"},
        {"model.fusion", "adaptive"},
        {"model.meta_mask", "111"},
        {"model.padded_backbone", "false"},
        {"model.coord_scale", "4"},
        {"model.file", ""},
        {"train.epochs", "600"},
        {"train.lr", "0.02"},
        {"train.lr_final", "0.05"},
        {"train.batch_size", "32"},
        {"eval.k", "20"},
        {"ablate.variants", "none, social, social_plus"},
        {"ablate.fusions", "adaptive"},
        {"ablate.masks", "111"},
        {"ablate.n_theta", "8"},
        {"ablate.seeds", "1, 2, 3"},
        {"intervene.scenario", ""},
        {"serve.host", "127.0.0.1"},
        {"serve.port", "8080"},
        {"serve.static_dir", ""},
    };
    return defaults;
}

void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' must look like key=value");
        kv[trim(std::string_view(o).substr(0, eq))] = unquote(trim(std::string_view(o).substr(eq + 1)));
    }
}

RunConfig make_run_config(const KeyValues& given, const std::filesystem::path& base_dir) {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : given)
        if (k != "seed" && !default_entries().count(k)) unknown.push_back(k);
    if (!unknown.empty()) {
        std::string msg = "unknown config key(s):";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw ConfigError(msg);
    }
    if (!given.count("seed")) throw ConfigError("config key 'seed' is required");

    KeyValues kv = default_entries();
    for (const auto& [k, v] : given) kv[k] = v;
    const Reader r(kv, base_dir);

    RunConfig c;
    c.entries = kv;
    c.seed = r.number<std::uint64_t>("seed");

    c.source = r.raw("data.source");
    if (c.source != "synthetic" && c.source != "files") Reader::fail("data.source", "must be 'synthetic' or 'files'");
    c.synthetic.clear();
    for (const auto& item : split_list(r.raw("data.synthetic"))) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) Reader::fail("data.synthetic", "entries must look like kind:count");
        const auto kind = r.with_key("data.synthetic", [&](const std::string&) {
            return parse_scenario_kind(trim(std::string_view(item).substr(0, colon)));
        });
        std::size_t count = 0;
        const std::string n = trim(std::string_view(item).substr(colon + 1));
        auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), count);
        if (ec != std::errc() || p != n.data() + n.size() || count == 0)
            Reader::fail("data.synthetic", "count '" + n + "' must be a positive integer");
        c.synthetic.emplace_back(kind, count);
    }
    if (c.source == "synthetic" && c.synthetic.empty()) Reader::fail("data.synthetic", "no scenarios listed");
    for (const auto& a : split_list(r.raw("data.annotations"))) {
        std::filesystem::path p(a);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        if (!std::filesystem::exists(p)) Reader::fail("data.annotations", "file '" + p.string() + "' does not exist");
        c.annotations.push_back(p);
    }
    if (c.source == "files" && c.annotations.empty()) Reader::fail("data.annotations", "required when data.source = files");
    c.unit = r.with_key("data.unit", [](const std::string& v) { return parse_unit(v); });
    c.map = r.path("data.map");
    c.calib_csv = r.path("data.calib_csv");
    {
        const auto parts = split_list(r.raw("data.calib"));
        if (parts.size() != 4) Reader::fail("data.calib", "expected four numbers w_x, w_y, b_x, b_y");
        double v[4];
        for (int i = 0; i < 4; ++i) {
            try {
                v[i] = std::stod(parts[static_cast<std::size_t>(i)]);
            } catch (const std::exception&) {
                Reader::fail("data.calib", "'" + parts[static_cast<std::size_t>(i)] + "' is not a number");
            }
        }
        c.calib.w = Vec2(v[0], v[1]);
        c.calib.b = Vec2(v[2], v[3]);
        r.with_key("data.calib", [&](const std::string&) {
            c.calib.validate();
            return 0;
        });
    }
    c.map_cells = r.number<int>("data.map_cells");
    if (c.map_cells < 1) Reader::fail("data.map_cells", "must be >= 1");
    c.held_out = r.raw("data.held_out");
    c.test_fraction = r.number<double>("data.test_fraction");
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) Reader::fail("data.test_fraction", "must lie in (0, 1)");
    c.stride = r.number<int>("data.stride");
    if (c.stride < 1) Reader::fail("data.stride", "must be >= 1");

    auto& m = c.model;
    m.sample.t_h = r.number<int>("sample.t_h");
    m.sample.t_f = r.number<int>("sample.t_f");
    m.sample.dt = r.number<double>("sample.dt");
    m.circle.n_theta = r.number<int>("circle.n_theta");
    m.circle.r_min = r.number<double>("circle.r_min");
    m.circle.n_ray = r.number<int>("circle.n_ray");
    m.circle.n_rad = r.number<int>("circle.n_rad");
    m.circle.k_neighbors = r.number<std::size_t>("circle.k_neighbors");
    m.d = r.number<int>("model.d");
    m.d_sc = r.number<int>("model.d_sc");
    m.k_gen = r.number<int>("model.k_gen");
    m.noise_dim = r.number<int>("model.noise_dim");
    m.layers = r.number<int>("model.layers");
    m.variant = r.with_key("model.variant", [](const std::string& v) { return parse_variant(v); });
    m.fusion = r.with_key("model.fusion", [](const std::string& v) { return parse_fusion_mode(v); });
    m.meta_mask = r.with_key("model.meta_mask", [](const std::string& v) { return parse_mask(v); });
    m.padded_backbone = r.boolean("model.padded_backbone");
    m.coord_scale = r.number<double>("model.coord_scale");
    try {
        m.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("model configuration (keys sample.*, circle.*, model.*): ") + e.what());
    }
    if (r.raw("model.file") != "zero") c.model_file = r.path("model.file");  // "zero": untrained parameters

    c.train.epochs = r.number<int>("train.epochs");
    c.train.lr = r.number<double>("train.lr");
    c.train.lr_final = r.number<double>("train.lr_final");
    c.train.batch_size = r.number<int>("train.batch_size");
    c.train.seed = c.seed;
    if (c.train.epochs < 0) Reader::fail("train.epochs", "must be >= 0");
    if (!(c.train.lr > 0.0)) Reader::fail("train.lr", "must be > 0");
    if (!(c.train.lr_final > 0.0 && c.train.lr_final <= 1.0)) Reader::fail("train.lr_final", "must lie in (0, 1]");
    if (c.train.batch_size < 1) Reader::fail("train.batch_size", "must be >= 1");
    c.eval_k = r.number<int>("eval.k");
    if (c.eval_k < 1) Reader::fail("eval.k", "must be >= 1");

    c.ablate_variants.clear();
    for (const auto& v : split_list(r.raw("ablate.variants")))
        c.ablate_variants.push_back(r.with_key("ablate.variants", [&](const std::string&) { return parse_variant(v); }));
    c.ablate_fusions.clear();
    for (const auto& v : split_list(r.raw("ablate.fusions")))
        c.ablate_fusions.push_back(
            r.with_key("ablate.fusions", [&](const std::string&) { return parse_fusion_mode(v); }));
    c.ablate_masks.clear();
    for (const auto& v : split_list(r.raw("ablate.masks")))
        c.ablate_masks.push_back(r.with_key("ablate.masks", [&](const std::string&) { return parse_mask(v); }));
    c.ablate_n_theta.clear();
    for (const auto& v : split_list(r.raw("ablate.n_theta"))) {
        int n = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec != std::errc() || p != v.data() + v.size() || n < 1)
            Reader::fail("ablate.n_theta", "'" + v + "' is not a positive integer");
        c.ablate_n_theta.push_back(n);
    }
    c.ablate_seeds.clear();
    for (const auto& v : split_list(r.raw("ablate.seeds"))) {
        std::uint64_t s = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
        if (ec != std::errc() || p != v.data() + v.size()) Reader::fail("ablate.seeds", "'" + v + "' is not a seed");
        c.ablate_seeds.push_back(s);
    }
    if (c.ablate_variants.empty() || c.ablate_fusions.empty() || c.ablate_masks.empty() || c.ablate_n_theta.empty() ||
        c.ablate_seeds.empty())
        throw ConfigError("config keys 'ablate.*' must each list at least one value");

    c.scenario = r.path("intervene.scenario");
    c.host = r.raw("serve.host");
    c.port = r.number<int>("serve.port");
    if (c.port < 0 || c.port > 65535) Reader::fail("serve.port", "must lie in [0, 65535]");
    c.static_dir = r.path("serve.static_dir");
    return c;
}

}  // namespace scplus
