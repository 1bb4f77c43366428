#include "scplus/service.hpp"

#include <map>
#include <mutex>
#include <regex>

#include "httplib.h"
#include "scplus/causal.hpp"
#include "scplus/error.hpp"
#include "scplus/synthetic.hpp"

namespace scplus {

namespace {

struct Session {
    std::mutex mutex;
    std::string id;
    std::shared_ptr<const ModelFile> model;
    SceneCase base;
    std::vector<InterventionSpec> specs;
    std::uint64_t noise_seed = 0;
};

ServiceResponse error(int status, const std::string& message, const std::string& field = {}) {
    Json e{{"message", message}};
    if (!field.empty()) e["field"] = field;
    return {status, Json{{"error", e}}};
}

// Spec errors start with the offending field ("manual_neighbor.v0 is required ...").
std::string field_of(const std::string& message) {
    const auto space = message.find(' ');
    const std::string head = message.substr(0, space);
    return head.find_first_of("._") != std::string::npos || head == "kind" ? head : std::string{};
}

Json reps_json(const PreparedInputs& in, bool physical) {
    Json j{{"social", to_json(in.social)}};
    if (physical) j["physical"] = to_json(in.physical);
    return j;
}

Json map_json(const SegmentationMap* map) {
    if (!map) return nullptr;
    return {{"height", map->height},
            {"width", map->width},
            {"row_scale", map->row_scale},
            {"col_scale", map->col_scale},
            {"rle", run_length_encode(*map)}};
}

Json snapshot(Session& s, int k) {
    const auto& params = s.model->params;
    const auto out = intervene(params, s.base, s.specs, k, s.noise_seed);
    const auto& sample = s.base.sample;
    const Path* truth = sample.future.empty() ? nullptr : &sample.future;
    const auto div = divergence(out.factual, out.counterfactual, truth);

    Json neighbors = Json::array();
    for (const auto& n : sample.neighbors) neighbors.push_back({{"agent_id", n.agent_id}, {"observed", to_json(n.observed)}});
    Json manual = Json::array();
    for (const auto& p : out.edited.manual_neighbors) manual.push_back(to_json(p));
    Json specs = Json::array();
    for (const auto& sp : s.specs) specs.push_back(to_json(sp));

    const bool physical = params.config.uses_physical();
    return {
        {"id", s.id},
        {"seed", s.noise_seed},
        {"k", k},
        {"model", to_json(params.config)},
        {"scene",
         {{"clip_id", sample.clip_id},
          {"target_id", sample.target_id},
          {"start_frame", sample.start_frame},
          {"origin_offset", to_json(sample.origin_offset)},
          {"observed", to_json(sample.observed)},
          {"truth", to_json(sample.future)},
          {"neighbors", neighbors},
          {"manual_neighbors", manual}}},
        {"calib", to_json(s.base.calib)},
        {"map", map_json(s.base.map.get())},
        {"counterfactual_map", map_json(out.edited.scene.map.get())},
        {"interventions", specs},
        {"factual", to_json(out.factual)},
        {"counterfactual", to_json(out.counterfactual)},
        {"reps", {{"factual", reps_json(out.factual_inputs, physical)},
                  {"counterfactual", reps_json(out.counterfactual_inputs, physical)}}},
        {"divergence", to_json(div)},
    };
}

}  // namespace

struct PlaygroundService::Impl {
    std::shared_ptr<const ModelFile> model;
    std::vector<SceneCase> pool;
    ServiceOptions options;

    std::mutex sessions_mutex;
    std::map<std::string, std::shared_ptr<Session>> sessions;
    std::uint64_t next_id = 1;

    httplib::Server server;

    std::shared_ptr<Session> find(const std::string& id) {
        std::lock_guard lock(sessions_mutex);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    ServiceResponse create(const Json& body) {
        SceneCase scene;
        if (body.contains("synthetic")) {
            const Json& syn = body.at("synthetic");
            if (!syn.is_object()) return error(422, "synthetic must be an object", "synthetic");
            ScenarioKind kind;
            try {
                kind = parse_scenario_kind(syn.value("kind", std::string("crossing")));
            } catch (const Error& e) {
                return error(422, e.what(), "synthetic.kind");
            }
            const auto seed = syn.value("seed", std::uint64_t{0});
            const auto index = syn.value("index", std::size_t{0});
            const auto set = generate_synthetic(kind, index + 1, seed, model->params.config.sample);
            if (index >= set.samples.size()) return error(422, "synthetic.index is out of range", "synthetic.index");
            scene = to_cases(set)[index];
        } else if (body.contains("sample")) {
            if (!body.at("sample").is_number_unsigned()) return error(422, "sample must be a nonnegative integer", "sample");
            const auto index = body.at("sample").get<std::size_t>();
            if (index >= pool.size())
                return error(422, "sample " + std::to_string(index) + " is out of range (" +
                                      std::to_string(pool.size()) + " samples loaded)",
                             "sample");
            scene = pool[index];
        } else {
            return error(422, "body needs 'sample' or 'synthetic'", "sample");
        }
        if (scene.sample.observed.size() != static_cast<std::size_t>(model->params.config.sample.t_h))
            return error(422, "sample length does not match the model's t_h", "sample");

        auto session = std::make_shared<Session>();
        session->model = model;
        session->base = std::move(scene);
        session->noise_seed = body.contains("seed") && body.at("seed").is_number_unsigned()
                                  ? body.at("seed").get<std::uint64_t>()
                                  : derive_seed(options.seed, {0x5e55, sample_key(session->base.sample)});
        {
            std::lock_guard lock(sessions_mutex);
            session->id = "s" + std::to_string(next_id++);
            sessions[session->id] = session;
        }
        std::lock_guard lock(session->mutex);
        return {201, snapshot(*session, options.k)};
    }
};

PlaygroundService::PlaygroundService(ModelFile model, std::vector<SceneCase> pool, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->model = std::make_shared<const ModelFile>(std::move(model));
    impl_->pool = std::move(pool);
    impl_->options = std::move(options);
    if (impl_->options.k < 1) throw ConfigError("service k must be >= 1");

    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        const auto r = handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto& srv = impl_->server;
    srv.Get("/session/.*", route);
    srv.Post("/session(/.*)?", route);
    srv.Delete("/session/.*", route);
    if (impl_->options.static_dir && !srv.set_mount_point("/", impl_->options.static_dir->string()))
        throw NotFoundError("static directory '" + impl_->options.static_dir->string() + "' does not exist");
}

PlaygroundService::~PlaygroundService() { stop(); }

ServiceResponse PlaygroundService::handle(const std::string& method, const std::string& path, const std::string& body) {
    static const std::regex session_re(R"(^/session/([A-Za-z0-9_-]+)$)");
    static const std::regex add_re(R"(^/session/([A-Za-z0-9_-]+)/intervention$)");
    static const std::regex del_re(R"(^/session/([A-Za-z0-9_-]+)/intervention/([0-9]+)$)");
    static const std::regex reseed_re(R"(^/session/([A-Za-z0-9_-]+)/reseed$)");

    Json json = Json::object();
    if ((method == "POST") && !body.empty()) {
        json = Json::parse(body, nullptr, false);
        if (json.is_discarded()) return error(400, "request body is not valid JSON");
    }
    const int k = impl_->options.k;
    try {
        std::smatch m;
        if (method == "POST" && path == "/session") return impl_->create(json);

        auto with_session = [&](const std::string& id, auto&& f) -> ServiceResponse {
            auto s = impl_->find(id);
            if (!s) return error(404, "unknown session '" + id + "'");
            std::lock_guard lock(s->mutex);
            return f(*s);
        };
        if (method == "GET" && std::regex_match(path, m, session_re))
            return with_session(m[1], [&](Session& s) { return ServiceResponse{200, snapshot(s, k)}; });
        if (method == "POST" && std::regex_match(path, m, add_re))
            return with_session(m[1], [&](Session& s) {
                InterventionSpec spec;
                try {
                    spec = spec_from_json(json);
                    validate_spec(spec, s.model->params.config);
                    // Input-level edits are checked against the scene too (e.g. a box needs a map).
                    std::vector<InterventionSpec> trial = s.specs;
                    trial.push_back(spec);
                    apply_interventions(s.model->params.config, s.base, trial);
                } catch (const ConfigError& e) {
                    return error(422, e.what(), field_of(e.what()));
                }
                s.specs.push_back(std::move(spec));
                return ServiceResponse{200, snapshot(s, k)};
            });
        if (method == "DELETE" && std::regex_match(path, m, del_re))
            return with_session(m[1], [&](Session& s) {
                const auto index = std::stoull(m[2]);
                if (index >= s.specs.size())
                    return error(404, "session has no intervention " + std::string(m[2]));
                s.specs.erase(s.specs.begin() + static_cast<std::ptrdiff_t>(index));
                return ServiceResponse{200, snapshot(s, k)};
            });
        if (method == "POST" && std::regex_match(path, m, reseed_re))
            return with_session(m[1], [&](Session& s) {
                if (json.contains("seed")) {
                    if (!json.at("seed").is_number_unsigned())
                        return error(422, "seed must be a nonnegative integer", "seed");
                    s.noise_seed = json.at("seed").get<std::uint64_t>();
                } else {
                    s.noise_seed = mix64(s.noise_seed);
                }
                return ServiceResponse{200, snapshot(s, k)};
            });
        return error(404, "no route for " + method + " " + path);
    } catch (const ConfigError& e) {
        return error(422, e.what(), field_of(e.what()));
    } catch (const Error& e) {
        return error(500, e.what());
    } catch (const Json::exception& e) {
        return error(422, e.what());
    }
}

int PlaygroundService::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw Error("cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void PlaygroundService::run() { impl_->server.listen_after_bind(); }

void PlaygroundService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace scplus
