#pragma once

// Run configuration: a flat TOML-style file of `key = value` lines grouped under
// `[section]` headers, plus `--set section.key=value` overrides.
//
//   seed = 7
//   [data]
//   source = synthetic            # or: files
//   synthetic = crossing:250, obstacle:250
//   [train]
//   epochs = 600
//
// Every key has a default except `seed`. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scplus/eval.hpp"
#include "scplus/predictor.hpp"
#include "scplus/segmap.hpp"
#include "scplus/synthetic.hpp"
#include "scplus/trajdata.hpp"

namespace scplus {

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` text; section headers prefix the keys. Quotes around values
/// are stripped. Throws ParseError with the line number.
KeyValues parse_key_values(std::string_view text);

struct RunConfig {
    std::uint64_t seed = 0;

    // data
    std::string source = "synthetic";
    std::vector<std::pair<ScenarioKind, std::size_t>> synthetic{{ScenarioKind::crossing, 250},
                                                                {ScenarioKind::obstacle, 250}};
    std::vector<std::filesystem::path> annotations;
    Unit unit = Unit::meters;
    std::optional<std::filesystem::path> map;
    std::optional<std::filesystem::path> calib_csv;  // correspondences for `calibrate`
    AffineCalib calib;
    int map_cells = 100;
    std::string held_out;           // clip id used as the test split for file data
    double test_fraction = 0.2;     // synthetic data: random share of samples held out
    int stride = 1;

    ModelConfig model;
    TrainOptions train;
    int eval_k = 20;

    // ablation grid: cross product of the listed values
    std::vector<Variant> ablate_variants{Variant::none, Variant::social, Variant::social_plus};
    std::vector<FusionMode> ablate_fusions{FusionMode::adaptive};
    std::vector<std::array<bool, 3>> ablate_masks{{true, true, true}};
    std::vector<int> ablate_n_theta{8};
    std::vector<std::uint64_t> ablate_seeds{1, 2, 3};

    std::optional<std::filesystem::path> scenario;  // intervention scenario JSON
    std::optional<std::filesystem::path> model_file;

    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> static_dir;

    KeyValues entries;  // effective key/value pairs, echoed into manifests
};

/// Builds a RunConfig from key/value pairs. Relative paths resolve against `base_dir`.
RunConfig make_run_config(const KeyValues& kv, const std::filesystem::path& base_dir = {});

/// Applies `key=value` overrides on top of `kv`.
void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides);

/// Default value for every recognized key (seed excluded).
const KeyValues& default_entries();

}  // namespace scplus
