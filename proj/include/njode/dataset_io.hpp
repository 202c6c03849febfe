#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "njode/datasets.hpp"

namespace njode {

using Json = nlohmann::json;

/// Directory layout: meta.json (spec, config, version, counts) and
/// paths.jsonl (one record per path). Numbers are written as decimal with 17
/// significant digits, so write/read round-trips are bit-exact.
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

Json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const Json& j);
Json generation_config_to_json(const GenerationConfig& cfg);
GenerationConfig generation_config_from_json(const Json& j);

/// Rejects keys outside the allowed set (typo protection for config files).
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace njode
