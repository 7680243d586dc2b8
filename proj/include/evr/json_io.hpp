#pragma once

#include <string_view>
#include <vector>

#include <json.hpp>

#include "evr/assessment.hpp"
#include "evr/network.hpp"
#include "evr/propagation.hpp"

// JSON encodings shared by the CLI, the session service and snapshots.
// States are written by name; belief vectors as arrays in state order.
namespace evr::json_io {

using nlohmann::json;

/// Non-finite reals are written as the strings "Infinity" / "-Infinity".
json real(double value);

json evidence_to_json(const CompiledNetwork& network, const Evidence& finding);
/// {"node": id, "state": name|index} or {"node": id, "likelihood": [...]}.
Evidence evidence_from_json(const CompiledNetwork& network, const json& value);
std::vector<Evidence> findings_from_json(const CompiledNetwork& network, const json& array);
json findings_to_json(const CompiledNetwork& network, const std::vector<Evidence>& findings);
/// "node=state" shorthand.
Evidence parse_inline_finding(const CompiledNetwork& network, std::string_view text);

json config_to_json(const CycleConfig& config);
CycleConfig config_from_json(const json& value);

json sources_to_json(const std::vector<InformationSource>& sources);
std::vector<InformationSource> sources_from_json(const json& value);

json validation_to_json(const ValidationReport& report);
json posteriors_to_json(const PosteriorMap& posteriors);
json beliefs_to_json(const BeliefState& state);
json hypotheses_to_json(const CompiledNetwork& network, const std::vector<HypothesisStatus>& statuses);
json goals_to_json(const GoalSet& goals);
json ranking_to_json(const std::vector<RankedSource>& ranking);
json sorted_findings_to_json(const CompiledNetwork& network, const std::vector<SortedFinding>& sorted);
json delta_to_json(const CompiledNetwork& network, const BeliefDelta& delta);
json commitment_to_json(const CompiledNetwork& network, const CommitmentReport& report);
json trace_to_json(const std::vector<TraceEvent>& trace);
std::vector<TraceEvent> trace_from_json(const json& value);

}  // namespace evr::json_io
