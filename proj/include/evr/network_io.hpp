#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "evr/network.hpp"

namespace evr {

/// Parses the JSON network document. Unknown keys are rejected
/// (ERR_UNKNOWN_FIELD); missing required keys and type mismatches raise
/// ERR_PARSE with a JSON path. Structural problems such as dangling links are
/// left for validate().
Network parse_network(std::string_view document);
Network network_from_json(const nlohmann::json& document);

/// Writes every field explicitly, so the output does not depend on defaults.
std::string serialize_network(const Network& network, int indent = 2);
nlohmann::json network_to_json(const Network& network);

Network load_network_file(const std::string& path);

}  // namespace evr
