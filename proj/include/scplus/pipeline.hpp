#pragma once

// Dataset assembly and the `scplus` command-line driver.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scplus/config.hpp"
#include "scplus/scene.hpp"
#include "scplus/synthetic.hpp"

namespace scplus {

struct Dataset {
    std::vector<SceneCase> train;
    std::vector<SceneCase> test;
    std::vector<std::string> warnings;
    std::size_t skipped_agents = 0;
};

/// Generates each listed scenario (one independent stream per entry), pools the
/// samples, shuffles them with `seed` and holds out round(test_fraction * n) for test.
Dataset synthetic_dataset(const std::vector<std::pair<ScenarioKind, std::size_t>>& scenarios, std::uint64_t seed,
                          const SampleSpec& spec, double test_fraction);

/// Synthetic data or annotation files (leave-one-clip-out on `data.held_out`).
Dataset load_dataset(const RunConfig& config);

/// Entry point of the `scplus` binary; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace scplus
