#include "evr/network_io.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "evr/error.hpp"

namespace evr {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 2> kTopKeys = {"id", "nodes"};
constexpr std::array<std::string_view, 10> kNodeKeys = {"id",  "label",      "states", "parents",          "cpt",
                                                        "observable", "target", "observation_cost", "severity",
                                                        "urgency"};

template <std::size_t N>
void reject_unknown(const json& object, const std::array<std::string_view, N>& allowed, const std::string& path) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto k : allowed) known = known || k == key;
    if (!known) throw Error(ErrorCode::kUnknownField, "unknown key '" + key + "'", path);
  }
}

const json& required(const json& object, const char* key, const std::string& path) {
  auto it = object.find(key);
  if (it == object.end()) throw Error(ErrorCode::kParse, std::string("missing required field '") + key + "'", path);
  return *it;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw Error(ErrorCode::kParse, "expected string", path);
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw Error(ErrorCode::kParse, "expected number", path);
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw Error(ErrorCode::kParse, "expected boolean", path);
  return v.get<bool>();
}

std::vector<std::string> as_strings(const json& v, const std::string& path) {
  if (!v.is_array()) throw Error(ErrorCode::kParse, "expected array of strings", path);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> as_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw Error(ErrorCode::kParse, "expected array of numbers", path);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

Network network_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "network document must be an object", "$");
  reject_unknown(doc, kTopKeys, "$");
  Network net;
  net.id = as_string(required(doc, "id", "$"), "$.id");
  const json& nodes = required(doc, "nodes", "$");
  if (!nodes.is_array()) throw Error(ErrorCode::kParse, "expected array", "$.nodes");

  std::vector<NodeDefaults> given;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const json& jn = nodes[i];
    std::string path = "$.nodes[" + std::to_string(i) + "]";
    if (!jn.is_object()) throw Error(ErrorCode::kParse, "node must be an object", path);
    Node node;
    node.id = as_string(required(jn, "id", path), path + ".id");
    path = "node '" + node.id + "'";
    reject_unknown(jn, kNodeKeys, path);
    node.label = jn.contains("label") ? as_string(jn["label"], path + ".label") : node.id;
    node.states = as_strings(required(jn, "states", path), path + ".states");
    if (jn.contains("parents")) node.parents = as_strings(jn["parents"], path + ".parents");
    const json& cpt = required(jn, "cpt", path);
    if (!cpt.is_array()) throw Error(ErrorCode::kParse, "expected array of rows", path + ".cpt");
    for (std::size_t r = 0; r < cpt.size(); ++r) {
      node.cpt.push_back(as_numbers(cpt[r], path + ".cpt[" + std::to_string(r) + "]"));
    }
    NodeDefaults flags;
    if (jn.contains("observable")) {
      node.observable = as_bool(jn["observable"], path + ".observable");
      flags.observable_given = true;
    }
    if (jn.contains("target")) {
      node.target = as_bool(jn["target"], path + ".target");
      flags.target_given = true;
    }
    if (jn.contains("observation_cost")) {
      node.observation_cost = as_number(jn["observation_cost"], path + ".observation_cost");
    }
    if (jn.contains("severity")) node.severity = as_numbers(jn["severity"], path + ".severity");
    if (jn.contains("urgency")) node.urgency = as_number(jn["urgency"], path + ".urgency");
    net.nodes.push_back(std::move(node));
    given.push_back(flags);
  }
  apply_structural_defaults(net, given);
  return net;
}

Network parse_network(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what(), "byte " + std::to_string(e.byte));
  }
  return network_from_json(doc);
}

json network_to_json(const Network& network) {
  json nodes = json::array();
  for (const Node& n : network.nodes) {
    nodes.push_back({{"id", n.id},
                     {"label", n.label},
                     {"states", n.states},
                     {"parents", n.parents},
                     {"cpt", n.cpt},
                     {"observable", n.observable},
                     {"target", n.target},
                     {"observation_cost", n.observation_cost},
                     {"severity", n.severity},
                     {"urgency", n.urgency}});
  }
  return {{"id", network.id}, {"nodes", std::move(nodes)}};
}

std::string serialize_network(const Network& network, int indent) {
  return network_to_json(network).dump(indent) + "\n";
}

Network load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open network file", path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_network(buffer.str());
}

}  // namespace evr
