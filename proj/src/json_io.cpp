#include "evr/json_io.hpp"

#include <cmath>
#include <limits>

#include "evr/error.hpp"

namespace evr::json_io {

namespace {

const json& field(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) throw Error(ErrorCode::kParse, std::string("missing field '") + key + "'", where);
  return *it;
}

double read_real(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::kParse, "expected number", where);
}

void reject_unknown(const json& object, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto k : allowed) known = known || k == key;
    if (!known) throw Error(ErrorCode::kUnknownField, "unknown key '" + key + "'", where);
  }
}

json statuses(const std::vector<HypothesisStatus>& list, const CompiledNetwork* network) {
  json out = json::array();
  for (const auto& h : list) {
    json item = {{"node", h.node}, {"state_index", h.state}, {"belief", h.belief}, {"status", to_string(h.status)}};
    if (network != nullptr) item["state"] = network->node(network->require(h.node)).states[h.state];
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

json real(double value) {
  if (std::isfinite(value)) return value;
  return value > 0 ? "Infinity" : "-Infinity";
}

json evidence_to_json(const CompiledNetwork& network, const Evidence& finding) {
  if (finding.is_hard()) {
    const std::size_t v = network.require(finding.node);
    return {{"node", finding.node}, {"state", network.node(v).states.at(finding.state)}};
  }
  return {{"node", finding.node}, {"likelihood", finding.likelihood}};
}

Evidence evidence_from_json(const CompiledNetwork& network, const json& value) {
  if (!value.is_object()) throw Error(ErrorCode::kParse, "finding must be an object");
  reject_unknown(value, {"node", "state", "likelihood"}, "finding");
  const json& node_field = field(value, "node", "finding");
  if (!node_field.is_string()) throw Error(ErrorCode::kParse, "finding node must be a string");
  const std::string node = node_field.get<std::string>();
  const std::size_t v = network.require(node);
  const bool has_state = value.contains("state");
  const bool has_likelihood = value.contains("likelihood");
  if (has_state == has_likelihood) {
    throw Error(ErrorCode::kParse, "finding needs exactly one of 'state' or 'likelihood'", node);
  }
  if (has_state) {
    const json& s = value["state"];
    if (s.is_string()) {
      auto index = network.state_index(v, s.get<std::string>());
      if (!index) throw Error(ErrorCode::kInvalidEvidence, "unknown state '" + s.get<std::string>() + "'", node);
      return Evidence::hard(node, *index);
    }
    if (s.is_number_unsigned()) return Evidence::hard(node, s.get<std::size_t>());
    throw Error(ErrorCode::kParse, "state must be a name or an index", node);
  }
  const json& lk = value["likelihood"];
  if (!lk.is_array()) throw Error(ErrorCode::kParse, "likelihood must be an array", node);
  std::vector<double> likelihood;
  for (const auto& x : lk) likelihood.push_back(read_real(x, node));
  Evidence e = Evidence::virtual_finding(node, std::move(likelihood));
  finding_likelihood(network, e);
  return e;
}

std::vector<Evidence> findings_from_json(const CompiledNetwork& network, const json& array) {
  if (!array.is_array()) throw Error(ErrorCode::kParse, "findings must be an array");
  std::vector<Evidence> out;
  for (std::size_t i = 0; i < array.size(); ++i) {
    try {
      out.push_back(evidence_from_json(network, array[i]));
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), "finding[" + std::to_string(i) + "]" + (e.subject().empty() ? "" : " " + e.subject()));
    }
  }
  return out;
}

json findings_to_json(const CompiledNetwork& network, const std::vector<Evidence>& findings) {
  json out = json::array();
  for (const auto& f : findings) out.push_back(evidence_to_json(network, f));
  return out;
}

Evidence parse_inline_finding(const CompiledNetwork& network, std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size()) {
    throw Error(ErrorCode::kParse, "expected node=state", std::string(text));
  }
  const std::string node(text.substr(0, eq));
  const std::string state(text.substr(eq + 1));
  const std::size_t v = network.require(node);
  auto index = network.state_index(v, state);
  if (!index) throw Error(ErrorCode::kInvalidEvidence, "unknown state '" + state + "'", node);
  return Evidence::hard(node, *index);
}

json config_to_json(const CycleConfig& c) {
  json out = {{"verify_threshold", c.verify_threshold},
              {"refute_threshold", c.refute_threshold},
              {"commit_threshold", c.commit_threshold},
              {"min_voi_per_cost", real(c.min_voi_per_cost)},
              {"max_goals", c.max_goals}};
  out["budget"] = c.budget ? json(*c.budget) : json(nullptr);
  out["max_queries"] = c.max_queries ? json(*c.max_queries) : json(nullptr);
  return out;
}

CycleConfig config_from_json(const json& value) {
  if (value.is_null()) return {};
  if (!value.is_object()) throw Error(ErrorCode::kParse, "config must be an object");
  reject_unknown(value,
                 {"verify_threshold", "refute_threshold", "commit_threshold", "min_voi_per_cost", "max_goals", "budget",
                  "max_queries"},
                 "config");
  CycleConfig c;
  if (value.contains("verify_threshold")) c.verify_threshold = read_real(value["verify_threshold"], "config");
  if (value.contains("refute_threshold")) c.refute_threshold = read_real(value["refute_threshold"], "config");
  if (value.contains("commit_threshold")) c.commit_threshold = read_real(value["commit_threshold"], "config");
  if (value.contains("min_voi_per_cost")) c.min_voi_per_cost = read_real(value["min_voi_per_cost"], "config");
  if (value.contains("max_goals")) {
    if (!value["max_goals"].is_number_unsigned()) throw Error(ErrorCode::kParse, "max_goals must be a positive integer");
    c.max_goals = value["max_goals"].get<std::size_t>();
  }
  if (value.contains("budget") && !value["budget"].is_null()) c.budget = read_real(value["budget"], "config.budget");
  if (value.contains("max_queries") && !value["max_queries"].is_null()) {
    if (!value["max_queries"].is_number_unsigned()) throw Error(ErrorCode::kParse, "max_queries must be a positive integer");
    c.max_queries = value["max_queries"].get<std::size_t>();
  }
  c.validate();
  return c;
}

json sources_to_json(const std::vector<InformationSource>& sources) {
  json out = json::array();
  for (const auto& s : sources) {
    json item = {{"id", s.id}, {"yields", s.yields}, {"cost", s.cost}};
    if (s.reliability.empty()) {
      item["reliability"] = nullptr;
    } else {
      item["reliability"] = s.reliability;
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<InformationSource> sources_from_json(const json& value) {
  const json* list = &value;
  if (value.is_object()) {
    reject_unknown(value, {"sources"}, "sources document");
    list = &field(value, "sources", "sources document");
  }
  if (!list->is_array()) throw Error(ErrorCode::kParse, "sources must be an array");
  std::vector<InformationSource> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& item = (*list)[i];
    const std::string where = "sources[" + std::to_string(i) + "]";
    if (!item.is_object()) throw Error(ErrorCode::kParse, "source must be an object", where);
    reject_unknown(item, {"id", "yields", "cost", "reliability"}, where);
    InformationSource s;
    try {
      s.id = field(item, "id", where).get<std::string>();
      s.yields = field(item, "yields", where).get<std::vector<std::string>>();
      if (item.contains("cost")) s.cost = read_real(item["cost"], where);
      if (item.contains("reliability") && !item["reliability"].is_null()) {
        s.reliability = item["reliability"].get<std::map<std::string, ConfusionMatrix>>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, e.what(), where);
    }
    out.push_back(std::move(s));
  }
  return out;
}

json validation_to_json(const ValidationReport& report) {
  json issues = json::array();
  for (const auto& i : report.issues) {
    issues.push_back({{"code", i.code},
                      {"subject", i.subject},
                      {"message", i.message},
                      {"severity", i.severity == Severity::kError ? "error" : "warning"}});
  }
  return {{"ok", report.ok}, {"issues", std::move(issues)}};
}

json posteriors_to_json(const PosteriorMap& posteriors) {
  json out = json::object();
  for (const auto& [node, p] : posteriors) out[node] = p;
  return out;
}

json beliefs_to_json(const BeliefState& state) { return posteriors_to_json(state.all_beliefs()); }

json hypotheses_to_json(const CompiledNetwork& network, const std::vector<HypothesisStatus>& list) {
  return statuses(list, &network);
}

json goals_to_json(const GoalSet& goals) {
  json out = json::array();
  for (const auto& g : goals) {
    out.push_back({{"kind", to_string(g.kind)},
                   {"nodes", g.nodes},
                   {"states", g.states},
                   {"score", g.score},
                   {"rationale", g.rationale}});
  }
  return out;
}

json ranking_to_json(const std::vector<RankedSource>& ranking) {
  json out = json::array();
  for (const auto& r : ranking) {
    out.push_back({{"source_id", r.source_id},
                   {"expected_gain", r.expected_gain},
                   {"gain_per_cost", real(r.gain_per_cost)},
                   {"cost", r.cost},
                   {"pending_yields", r.pending_yields}});
  }
  return out;
}

json sorted_findings_to_json(const CompiledNetwork& network, const std::vector<SortedFinding>& sorted) {
  json out = json::array();
  for (const auto& s : sorted) {
    json item = {{"finding", evidence_to_json(network, s.finding)},
                 {"relevant_targets", s.relevant_targets},
                 {"goal_relevant", s.goal_relevant},
                 {"tag", to_string(s.tag)},
                 {"newly_triggered", statuses(s.newly_triggered, &network)}};
    if (!s.preview_error.empty()) item["preview_error"] = s.preview_error;
    out.push_back(std::move(item));
  }
  return out;
}

json delta_to_json(const CompiledNetwork& network, const BeliefDelta& delta) {
  json changes = json::object();
  for (const auto& [node, d] : delta.changes) changes[node] = d;
  json status = json::array();
  for (const auto& c : delta.status_changes) {
    status.push_back({{"node", c.node},
                      {"state", network.node(network.require(c.node)).states[c.state]},
                      {"state_index", c.state},
                      {"from", to_string(c.from)},
                      {"to", to_string(c.to)}});
  }
  return {{"changes", std::move(changes)}, {"status_changes", std::move(status)}};
}

json commitment_to_json(const CompiledNetwork& network, const CommitmentReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"node", e.node},
                       {"committed", e.state ? json(*e.state) : json("UNRESOLVED")},
                       {"resolved", e.state.has_value()},
                       {"argmax", network.node(network.require(e.node)).states[e.argmax]},
                       {"belief", e.belief},
                       {"beliefs", e.beliefs}});
  }
  return {{"entries", std::move(entries)},
          {"findings", findings_to_json(network, report.findings)},
          {"termination", to_string(report.reason)},
          {"spent", report.spent},
          {"queries", report.queries},
          {"residual", statuses(report.residual, &network)}};
}

json trace_to_json(const std::vector<TraceEvent>& trace) {
  json out = json::array();
  for (const auto& e : trace) out.push_back({{"seq", e.seq}, {"kind", e.kind}, {"detail", e.detail}});
  return out;
}

std::vector<TraceEvent> trace_from_json(const json& value) {
  if (!value.is_array()) throw Error(ErrorCode::kParse, "trace must be an array");
  std::vector<TraceEvent> out;
  for (const auto& item : value) {
    out.push_back({field(item, "seq", "trace").get<std::size_t>(), field(item, "kind", "trace").get<std::string>(),
                   field(item, "detail", "trace")});
  }
  return out;
}

}  // namespace evr::json_io
