#pragma once

// JSON views of the library's value types (reports, API payloads, file headers).

#include "json.hpp"
#include "scplus/circle.hpp"
#include "scplus/predictor.hpp"
#include "scplus/segmap.hpp"
#include "scplus/trajdata.hpp"

namespace scplus {

using Json = nlohmann::json;

Json to_json(const Vec2& p);
Vec2 vec2_from_json(const Json& j);
Json to_json(const Path& path);
Path path_from_json(const Json& j);

Json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& j);

Json to_json(const PredictionSet& set);
Json to_json(const SocialCircleRep& rep);
Json to_json(const PhysicalCircleRep& rep);
Json to_json(const AffineCalib& calib);
Json to_json(const ParamCount& count);

}  // namespace scplus
