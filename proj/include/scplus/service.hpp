#pragma once

// HTTP playground: one session per (model, sample) pair; interventions are kept as an
// ordered list and re-applied to the immutable base scene on every request.
//
//   POST   /session                          {"sample": i} or {"synthetic": {...}}
//   GET    /session/{id}
//   POST   /session/{id}/intervention        one intervention spec
//   DELETE /session/{id}/intervention/{index}
//   POST   /session/{id}/reseed              {"seed": n} (optional)
//
// All positions are in the sample frame (target's last observed position at the
// origin); `origin_offset` maps them to scene coordinates.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scplus/json_io.hpp"
#include "scplus/predictor.hpp"
#include "scplus/scene.hpp"

namespace scplus {

struct ServiceOptions {
    int k = 20;
    std::uint64_t seed = 0;  // session noise seeds derive from this and the sample
    std::optional<std::filesystem::path> static_dir;
};

struct ServiceResponse {
    int status = 200;
    Json body;
};

class PlaygroundService {
public:
    PlaygroundService(ModelFile model, std::vector<SceneCase> pool, ServiceOptions options = {});
    ~PlaygroundService();
    PlaygroundService(const PlaygroundService&) = delete;
    PlaygroundService& operator=(const PlaygroundService&) = delete;

    /// Transport-independent request handling; the HTTP server routes through here.
    ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

    /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace scplus
