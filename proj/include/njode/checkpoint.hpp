#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "njode/model.hpp"

namespace njode {

nlohmann::json mlp_to_json(const MlpParams& p);
MlpParams mlp_from_json(const nlohmann::json& j);

/// Versioned JSON container: architecture metadata plus flat value arrays.
/// Doubles round-trip bit-exactly.
void save_checkpoint(const NjodeParams& p, const std::string& path);
NjodeParams load_checkpoint(const std::string& path);

}  // namespace njode
