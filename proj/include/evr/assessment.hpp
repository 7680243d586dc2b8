#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evr/fixtures.hpp"
#include "evr/network.hpp"
#include "evr/propagation.hpp"

namespace evr {

struct CycleConfig {
  double verify_threshold = 0.95;
  double refute_threshold = 0.05;
  double commit_threshold = 0.90;
  double min_voi_per_cost = 0.01;  // bits per cost unit
  std::size_t max_goals = 3;
  std::optional<double> budget;
  std::optional<std::size_t> max_queries;

  /// Throws ERR_INVALID_CONFIG.
  void validate() const;
  bool operator==(const CycleConfig&) const = default;
};

enum class HypothesisState { kVerified, kRefuted, kUncertain };

struct HypothesisStatus {
  std::string node;
  std::size_t state = 0;
  double belief = 0.0;
  HypothesisState status = HypothesisState::kUncertain;

  bool operator==(const HypothesisStatus&) const = default;
};

enum class GoalKind { kVerify, kDifferentiate };

/// VERIFY: a single uncertain hypothesis of one node. DIFFERENTIATE: several
/// uncertain states of one node, or uncertain co-parents of a shared child.
struct Goal {
  GoalKind kind = GoalKind::kVerify;
  std::vector<std::string> nodes;
  std::vector<std::size_t> states;  // uncertain states (single-node goals)
  double score = 0.0;
  std::string rationale;

  bool operator==(const Goal&) const = default;
};
using GoalSet = std::vector<Goal>;

/// Confusion matrix rows are the true state, columns the reported state.
using ConfusionMatrix = std::vector<std::vector<double>>;

struct InformationSource {
  std::string id;
  std::vector<std::string> yields;
  double cost = 1.0;
  std::map<std::string, ConfusionMatrix> reliability;  // absent node = faithful report

  bool operator==(const InformationSource&) const = default;
};

struct RankedSource {
  std::string source_id;
  double expected_gain = 0.0;  // bits
  double gain_per_cost = 0.0;
  double cost = 0.0;
  std::vector<std::string> pending_yields;
};

enum class FindingTag { kGoal, kLateral };

struct SortedFinding {
  Evidence finding;
  std::vector<std::string> relevant_targets;
  bool goal_relevant = false;
  FindingTag tag = FindingTag::kLateral;
  std::vector<HypothesisStatus> newly_triggered;  // status changes if asserted alone
  std::string preview_error;                      // error code when the preview failed
};

struct StatusChange {
  std::string node;
  std::size_t state = 0;
  HypothesisState from = HypothesisState::kUncertain;
  HypothesisState to = HypothesisState::kUncertain;
};

struct BeliefDelta {
  std::map<std::string, std::vector<double>> changes;  // after - before, per state
  std::vector<StatusChange> status_changes;
};

enum class Termination { kContinue, kResolved, kNotWorthCost, kForced };

struct TraceEvent {
  std::size_t seq = 0;
  std::string kind;
  nlohmann::json detail;

  bool operator==(const TraceEvent&) const = default;
};

struct AssessmentState {
  BeliefState beliefs;
  CycleConfig config;
  std::vector<InformationSource> sources;
  GoalSet goals;
  double spent = 0.0;
  std::size_t queries = 0;
  std::vector<std::string> failed_sources;
  std::vector<TraceEvent> trace;

  const CompiledNetwork& network() const { return beliefs.network(); }
  const InformationSource* find_source(std::string_view id) const;
  void record(std::string kind, nlohmann::json detail);
};

struct CommitmentEntry {
  std::string node;
  std::optional<std::string> state;  // nullopt = UNRESOLVED
  std::size_t argmax = 0;
  double belief = 0.0;
  std::vector<double> beliefs;
};

struct CommitmentReport {
  std::vector<CommitmentEntry> entries;
  std::vector<Evidence> findings;
  Termination reason = Termination::kContinue;
  double spent = 0.0;
  std::size_t queries = 0;
  std::vector<HypothesisStatus> residual;
};

/// Maps an invoked source to findings for its pending yield nodes.
using Executor = std::function<std::vector<Evidence>(const InformationSource& source,
                                                     const std::vector<std::string>& pending_yields,
                                                     const AssessmentState& state)>;

std::string_view to_string(HypothesisState s);
std::string_view to_string(GoalKind k);
std::string_view to_string(FindingTag t);
std::string_view to_string(Termination t);

/// Throws ERR_INVALID_SOURCE.
void validate_sources(const CompiledNetwork& network, const std::vector<InformationSource>& sources);

/// One faithful source per observable node, id = node id. `unit_cost`
/// ignores the nodes' observation_cost.
std::vector<InformationSource> default_sources(const CompiledNetwork& network, bool unit_cost = false);

AssessmentState start_session(CompiledNetwork network, CycleConfig config, std::vector<InformationSource> sources,
                              const std::vector<Evidence>& initial_findings);

std::vector<HypothesisStatus> classify_hypotheses(const AssessmentState& state);
GoalSet set_goals(const AssessmentState& state);

/// Throws ERR_ALREADY_OBSERVED when the node carries a finding.
std::vector<double> predictive_distribution(const AssessmentState& state, std::string_view node);

/// Myopic entropy-based value of information per source. Throws
/// ERR_NO_USABLE_SOURCE when no source has an unobserved yield.
std::vector<RankedSource> rank_sources(const AssessmentState& state, const GoalSet& goals);

std::vector<SortedFinding> sort_findings(const AssessmentState& state, const std::vector<Evidence>& incoming);

/// All-or-nothing; on error the input state is untouched.
std::pair<AssessmentState, BeliefDelta> integrate(const AssessmentState& state, const std::vector<Evidence>& incoming);

/// Records the spend and returns the yield nodes awaiting outcomes.
/// Throws ERR_NO_SUCH_SOURCE / ERR_SOURCE_EXHAUSTED.
std::pair<AssessmentState, std::vector<std::string>> invoke_source(const AssessmentState& state,
                                                                   std::string_view source_id);

/// RESOLVED, then NOT_WORTH_COST, then FORCED.
Termination check_termination(const AssessmentState& state);

/// Throws ERR_NOT_TERMINATED while check_termination says CONTINUE.
CommitmentReport compose_commitment(const AssessmentState& state);

struct CycleResult {
  AssessmentState state;
  CommitmentReport report;
  std::size_t invocations = 0;
};

CycleResult run_cycle(AssessmentState state, const Executor& executor);

/// Executor that reports a fixed ground-truth world. Faithful sources yield
/// HARD findings; unreliable ones sample a garbled report from the confusion
/// row and yield the matching likelihood column as a VIRTUAL finding.
Executor make_world_executor(fixtures::WorldAssignment world, std::uint64_t seed);

}  // namespace evr
