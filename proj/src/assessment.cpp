#include "evr/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "evr/error.hpp"
#include "evr/json_io.hpp"

namespace evr {

using nlohmann::json;

std::string_view to_string(HypothesisState s) {
  switch (s) {
    case HypothesisState::kVerified: return "VERIFIED";
    case HypothesisState::kRefuted: return "REFUTED";
    case HypothesisState::kUncertain: return "UNCERTAIN";
  }
  return "?";
}

std::string_view to_string(GoalKind k) { return k == GoalKind::kVerify ? "VERIFY" : "DIFFERENTIATE"; }

std::string_view to_string(FindingTag t) { return t == FindingTag::kGoal ? "GOAL" : "LATERAL"; }

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kContinue: return "CONTINUE";
    case Termination::kResolved: return "RESOLVED";
    case Termination::kNotWorthCost: return "NOT_WORTH_COST";
    case Termination::kForced: return "FORCED";
  }
  return "?";
}

void CycleConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (!(verify_threshold > 0.5 && verify_threshold <= 1.0)) fail("verify_threshold must lie in (0.5, 1]");
  if (!(refute_threshold >= 0.0 && refute_threshold < 0.5)) fail("refute_threshold must lie in [0, 0.5)");
  if (!(refute_threshold < verify_threshold)) fail("refute_threshold must be below verify_threshold");
  if (!(commit_threshold > 0.5 && commit_threshold <= 1.0)) fail("commit_threshold must lie in (0.5, 1]");
  if (!(min_voi_per_cost > 0.0)) fail("min_voi_per_cost must be positive");
  if (max_goals == 0) fail("max_goals must be positive");
  if (budget && !(*budget >= 0.0)) fail("budget must be non-negative");
  if (max_queries && *max_queries == 0) fail("max_queries must be positive");
}

const InformationSource* AssessmentState::find_source(std::string_view id) const {
  auto it = std::find_if(sources.begin(), sources.end(), [&](const InformationSource& s) { return s.id == id; });
  return it == sources.end() ? nullptr : &*it;
}

void AssessmentState::record(std::string kind, json detail) {
  trace.push_back({trace.size(), std::move(kind), std::move(detail)});
}

void validate_sources(const CompiledNetwork& network, const std::vector<InformationSource>& sources) {
  std::set<std::string> ids;
  for (const auto& src : sources) {
    auto fail = [&](const std::string& what) { throw Error(ErrorCode::kInvalidSource, what, src.id); };
    if (src.id.empty()) fail("source id must be nonempty");
    if (!ids.insert(src.id).second) fail("duplicate source id");
    if (src.yields.empty()) fail("source must yield at least one node");
    if (!(src.cost >= 0.0) || !std::isfinite(src.cost)) fail("cost must be finite and non-negative");
    std::set<std::string> seen;
    for (const auto& y : src.yields) {
      auto v = network.index_of(y);
      if (!v) fail("yield node '" + y + "' does not exist");
      if (!network.node(*v).observable) fail("yield node '" + y + "' is not observable");
      if (!seen.insert(y).second) fail("yield node '" + y + "' listed twice");
    }
    for (const auto& [node, matrix] : src.reliability) {
      if (!seen.contains(node)) fail("reliability given for '" + node + "' which the source does not yield");
      const std::size_t k = network.state_count(network.require(node));
      if (matrix.size() != k) fail("confusion matrix for '" + node + "' needs " + std::to_string(k) + " rows");
      for (const auto& row : matrix) {
        if (row.size() != k) fail("confusion matrix for '" + node + "' must be square");
        double sum = 0.0;
        for (double p : row) {
          if (!(p >= 0.0) || !std::isfinite(p)) fail("confusion entries must be finite and non-negative");
          sum += p;
        }
        if (std::abs(sum - 1.0) > kCptRowTolerance) fail("confusion row for '" + node + "' must sum to 1");
      }
    }
  }
}

std::vector<InformationSource> default_sources(const CompiledNetwork& network, bool unit_cost) {
  std::vector<InformationSource> out;
  for (std::size_t v = 0; v < network.size(); ++v) {
    const Node& n = network.node(v);
    if (!n.observable) continue;
    out.push_back({n.id, {n.id}, unit_cost ? 1.0 : n.observation_cost, {}});
  }
  return out;
}

namespace {

void require_observable(const CompiledNetwork& network, const std::vector<Evidence>& findings) {
  for (std::size_t i = 0; i < findings.size(); ++i) {
    const Evidence& f = findings[i];
    const std::size_t v = network.require(f.node);
    if (f.is_hard() && !network.node(v).observable) {
      throw Error(ErrorCode::kUnobservableFinding,
                  "hard findings need an observable node; report a likelihood vector instead",
                  "finding[" + std::to_string(i) + "] " + f.node);
    }
  }
}

HypothesisState classify(double belief, const CycleConfig& cfg) {
  if (belief >= cfg.verify_threshold) return HypothesisState::kVerified;
  if (belief <= cfg.refute_threshold) return HypothesisState::kRefuted;
  return HypothesisState::kUncertain;
}

double normalized_entropy(std::span<const double> belief) {
  if (belief.size() < 2) return 0.0;
  return entropy_bits(belief) / std::log2(static_cast<double>(belief.size()));
}

std::string format_real(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

// Smallest-index union-find over node indices, used to merge co-parent goals.
struct Groups {
  std::vector<std::size_t> parent;
  explicit Groups(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<std::size_t> goal_node_indices(const CompiledNetwork& network, const GoalSet& goals) {
  std::set<std::size_t> nodes;
  for (const auto& g : goals) {
    for (const auto& id : g.nodes) nodes.insert(network.require(id));
  }
  return {nodes.begin(), nodes.end()};
}

double goal_entropy(const BeliefState& bs, const std::vector<std::size_t>& goal_nodes) {
  double h = 0.0;
  for (std::size_t g : goal_nodes) h += entropy_bits(bs.beliefs(g));
  return h;
}

// Expected total goal entropy after observing yields[i..], expectation under
// the current predictive distribution of each (possibly garbled) report.
double expected_posterior_entropy(const BeliefState& bs, const InformationSource& source,
                                  const std::vector<std::size_t>& yields, std::size_t i,
                                  const std::vector<std::size_t>& goal_nodes) {
  if (i == yields.size()) return goal_entropy(bs, goal_nodes);
  const CompiledNetwork& net = bs.network();
  const std::size_t y = yields[i];
  const std::string& id = net.node(y).id;
  const auto predictive = bs.beliefs(y);
  const std::size_t k = predictive.size();
  auto confusion = source.reliability.find(id);

  double expected = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    double p = 0.0;
    Evidence hypothetical;
    if (confusion == source.reliability.end()) {
      p = predictive[r];
      hypothetical = Evidence::hard(id, r);
    } else {
      std::vector<double> column(k);
      for (std::size_t t = 0; t < k; ++t) {
        column[t] = confusion->second[t][r];
        p += predictive[t] * column[t];
      }
      if (p <= 0.0) continue;
      hypothetical = Evidence::virtual_finding(id, std::move(column));
    }
    if (p <= 0.0) continue;
    try {
      const BeliefState next = bs.assert_evidence(hypothetical);
      expected += p * expected_posterior_entropy(next, source, yields, i + 1, goal_nodes);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroProbabilityEvidence) throw;
    }
  }
  return expected;
}

std::vector<std::size_t> pending_yields(const AssessmentState& state, const InformationSource& source) {
  std::vector<std::size_t> out;
  for (const auto& y : source.yields) {
    if (!state.beliefs.observed(y)) out.push_back(state.network().require(y));
  }
  return out;
}

bool failed(const AssessmentState& state, const std::string& id) {
  return std::find(state.failed_sources.begin(), state.failed_sources.end(), id) != state.failed_sources.end();
}

}  // namespace

AssessmentState start_session(CompiledNetwork network, CycleConfig config, std::vector<InformationSource> sources,
                              const std::vector<Evidence>& initial_findings) {
  config.validate();
  validate_sources(network, sources);
  require_observable(network, initial_findings);
  BeliefState prior = BeliefState::initialize(std::move(network));
  BeliefState current = prior.assert_all(initial_findings);
  AssessmentState state{std::move(current), config, std::move(sources), {}, 0.0, 0, {}, {}};
  state.goals = set_goals(state);
  state.record("start", {{"network", state.network().network().id},
                         {"findings", json_io::findings_to_json(state.network(), initial_findings)},
                         {"goals", json_io::goals_to_json(state.goals)}});
  return state;
}

std::vector<HypothesisStatus> classify_hypotheses(const AssessmentState& state) {
  std::vector<HypothesisStatus> out;
  const CompiledNetwork& net = state.network();
  for (std::size_t v = 0; v < net.size(); ++v) {
    if (!net.node(v).target) continue;
    const auto bel = state.beliefs.beliefs(v);
    for (std::size_t s = 0; s < bel.size(); ++s) {
      out.push_back({net.node(v).id, s, bel[s], classify(bel[s], state.config)});
    }
  }
  return out;
}

GoalSet set_goals(const AssessmentState& state) {
  const CompiledNetwork& net = state.network();
  const auto statuses = classify_hypotheses(state);

  struct Candidate {
    std::size_t node;
    std::vector<std::size_t> uncertain;
    double score;
    double incidence;
    std::string rationale;
  };
  std::map<std::size_t, Candidate> candidates;
  const BeliefState prior = BeliefState::initialize(net);

  for (const auto& h : statuses) {
    if (h.status != HypothesisState::kUncertain) continue;
    const std::size_t v = net.require(h.node);
    auto [it, fresh] = candidates.try_emplace(v, Candidate{v, {}, 0.0, 0.0, {}});
    it->second.uncertain.push_back(h.state);
  }
  for (auto it = candidates.begin(); it != candidates.end();) {
    Candidate& c = it->second;
    const Node& node = net.node(c.node);
    const auto bel = state.beliefs.beliefs(c.node);
    double weighted = 0.0;
    for (std::size_t s : c.uncertain) weighted = std::max(weighted, node.severity[s] * bel[s]);
    const double h_norm = normalized_entropy(bel);
    c.score = node.urgency * weighted * h_norm;
    const auto prior_bel = prior.beliefs(c.node);
    c.incidence = *std::max_element(prior_bel.begin(), prior_bel.end());
    c.rationale = "urgency " + format_real(node.urgency) + " x severity*belief " + format_real(weighted) +
                  " x normalized entropy " + format_real(h_norm);
    if (!(c.score > 0.0)) {
      it = candidates.erase(it);
    } else {
      ++it;
    }
  }

  // Uncertain targets that share a child compete to explain it.
  Groups groups(net.size());
  for (std::size_t child = 0; child < net.size(); ++child) {
    std::optional<std::size_t> first;
    for (std::size_t p : net.parents(child)) {
      if (!candidates.contains(p)) continue;
      if (first) groups.unite(*first, p);
      else first = p;
    }
  }
  std::map<std::size_t, std::vector<const Candidate*>> merged;
  for (const auto& [v, c] : candidates) merged[groups.find(v)].push_back(&c);

  struct Ranked {
    Goal goal;
    double incidence;
  };
  std::vector<Ranked> ranked;
  for (auto& [root, members] : merged) {
    std::sort(members.begin(), members.end(), [&](const Candidate* a, const Candidate* b) {
      if (a->score != b->score) return a->score > b->score;
      return net.node(a->node).id < net.node(b->node).id;
    });
    Goal g;
    double incidence = 0.0;
    for (const Candidate* c : members) {
      g.nodes.push_back(net.node(c->node).id);
      g.score = std::max(g.score, c->score);
      incidence = std::max(incidence, c->incidence);
    }
    if (members.size() == 1) {
      g.states = members.front()->uncertain;
      g.kind = g.states.size() >= 2 ? GoalKind::kDifferentiate : GoalKind::kVerify;
      g.rationale = members.front()->rationale;
    } else {
      g.kind = GoalKind::kDifferentiate;
      g.rationale = "competing causes of a shared finding; best member: " + members.front()->rationale;
    }
    ranked.push_back({std::move(g), incidence});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.goal.score != b.goal.score) return a.goal.score > b.goal.score;
    if (a.incidence != b.incidence) return a.incidence > b.incidence;
    return a.goal.nodes.front() < b.goal.nodes.front();
  });
  GoalSet out;
  for (std::size_t i = 0; i < ranked.size() && i < state.config.max_goals; ++i) out.push_back(std::move(ranked[i].goal));
  return out;
}

std::vector<double> predictive_distribution(const AssessmentState& state, std::string_view node) {
  const std::size_t v = state.network().require(node);
  if (state.beliefs.observed(node)) {
    throw Error(ErrorCode::kAlreadyObserved, "node already carries a finding", std::string(node));
  }
  const auto bel = state.beliefs.beliefs(v);
  return {bel.begin(), bel.end()};
}

std::vector<RankedSource> rank_sources(const AssessmentState& state, const GoalSet& goals) {
  const auto goal_nodes = goal_node_indices(state.network(), goals);
  const double current = goal_entropy(state.beliefs, goal_nodes);
  std::vector<RankedSource> out;
  for (const auto& source : state.sources) {
    if (failed(state, source.id)) continue;
    const auto pending = pending_yields(state, source);
    if (pending.empty()) continue;
    RankedSource r;
    r.source_id = source.id;
    r.cost = source.cost;
    for (std::size_t y : pending) r.pending_yields.push_back(state.network().node(y).id);
    if (!goal_nodes.empty()) {
      r.expected_gain = current - expected_posterior_entropy(state.beliefs, source, pending, 0, goal_nodes);
    }
    if (source.cost > 0.0) {
      r.gain_per_cost = r.expected_gain / source.cost;
    } else {
      r.gain_per_cost = r.expected_gain > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw Error(ErrorCode::kNoUsableSource, "every source's yields are already observed");
  std::sort(out.begin(), out.end(), [](const RankedSource& a, const RankedSource& b) {
    if (a.gain_per_cost != b.gain_per_cost) return a.gain_per_cost > b.gain_per_cost;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.source_id < b.source_id;
  });
  return out;
}

std::vector<SortedFinding> sort_findings(const AssessmentState& state, const std::vector<Evidence>& incoming) {
  const CompiledNetwork& net = state.network();
  std::set<std::string> goal_nodes;
  for (const auto& g : state.goals) goal_nodes.insert(g.nodes.begin(), g.nodes.end());
  const auto before = classify_hypotheses(state);

  std::vector<SortedFinding> out;
  for (const Evidence& f : incoming) {
    const std::size_t start = net.require(f.node);
    SortedFinding sorted;
    sorted.finding = f;

    // Undirected reachability; hard-observed nodes block the path.
    std::vector<bool> seen(net.size(), false);
    std::deque<std::size_t> queue{start};
    seen[start] = true;
    std::set<std::string> relevant;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      if (net.node(v).target && (v == start || !state.beliefs.hard_observed(v))) relevant.insert(net.node(v).id);
      auto visit = [&](std::size_t w) {
        if (seen[w] || state.beliefs.hard_observed(w)) return;
        seen[w] = true;
        queue.push_back(w);
      };
      for (std::size_t p : net.parents(v)) visit(p);
      for (std::size_t c : net.children(v)) visit(c);
    }
    sorted.relevant_targets.assign(relevant.begin(), relevant.end());
    sorted.goal_relevant = std::any_of(relevant.begin(), relevant.end(),
                                       [&](const std::string& id) { return goal_nodes.contains(id); });
    sorted.tag = sorted.goal_relevant ? FindingTag::kGoal : FindingTag::kLateral;

    try {
      AssessmentState probe = state;
      probe.beliefs = state.beliefs.assert_evidence(f);
      const auto after = classify_hypotheses(probe);
      for (std::size_t i = 0; i < after.size(); ++i) {
        if (after[i].status != before[i].status) sorted.newly_triggered.push_back(after[i]);
      }
    } catch (const Error& e) {
      sorted.preview_error = std::string(to_string(e.code()));
    }
    out.push_back(std::move(sorted));
  }
  return out;
}

std::pair<AssessmentState, BeliefDelta> integrate(const AssessmentState& state, const std::vector<Evidence>& incoming) {
  if (incoming.empty()) {
    BeliefDelta zero;
    const CompiledNetwork& net = state.network();
    for (std::size_t v = 0; v < net.size(); ++v) zero.changes[net.node(v).id].assign(net.state_count(v), 0.0);
    return {state, std::move(zero)};
  }
  require_observable(state.network(), incoming);
  AssessmentState next = state;
  next.beliefs = state.beliefs.assert_all(incoming);

  const CompiledNetwork& net = state.network();
  BeliefDelta delta;
  for (std::size_t v = 0; v < net.size(); ++v) {
    const auto a = state.beliefs.beliefs(v);
    const auto b = next.beliefs.beliefs(v);
    std::vector<double> d(a.size());
    for (std::size_t s = 0; s < d.size(); ++s) d[s] = b[s] - a[s];
    delta.changes.emplace(net.node(v).id, std::move(d));
  }
  const auto before = classify_hypotheses(state);
  const auto after = classify_hypotheses(next);
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (after[i].status != before[i].status) {
      delta.status_changes.push_back({after[i].node, after[i].state, before[i].status, after[i].status});
    }
  }
  next.goals = set_goals(next);
  next.record("integrate", {{"findings", json_io::findings_to_json(net, incoming)},
                            {"status_changes", json_io::delta_to_json(net, delta)["status_changes"]},
                            {"goals", json_io::goals_to_json(next.goals)}});
  return {std::move(next), std::move(delta)};
}

std::pair<AssessmentState, std::vector<std::string>> invoke_source(const AssessmentState& state,
                                                                   std::string_view source_id) {
  const InformationSource* source = state.find_source(source_id);
  if (source == nullptr) throw Error(ErrorCode::kNoSuchSource, "unknown source", std::string(source_id));
  const auto pending = pending_yields(state, *source);
  if (pending.empty()) {
    throw Error(ErrorCode::kSourceExhausted, "all yield nodes already observed", std::string(source_id));
  }
  AssessmentState next = state;
  next.spent += source->cost;
  ++next.queries;
  std::vector<std::string> names;
  for (std::size_t y : pending) names.push_back(state.network().node(y).id);
  next.record("invoke", {{"source", source->id},
                         {"cost", source->cost},
                         {"pending", names},
                         {"spent", next.spent},
                         {"queries", next.queries}});
  return {std::move(next), std::move(names)};
}

Termination check_termination(const AssessmentState& state) {
  const CompiledNetwork& net = state.network();
  bool resolved = true;
  for (std::size_t v = 0; v < net.size() && resolved; ++v) {
    if (!net.node(v).target) continue;
    const auto bel = state.beliefs.beliefs(v);
    resolved = *std::max_element(bel.begin(), bel.end()) >= state.config.verify_threshold;
  }
  if (resolved) return Termination::kResolved;

  const GoalSet goals = set_goals(state);
  if (goals.empty()) return Termination::kNotWorthCost;
  std::vector<RankedSource> ranking;
  try {
    ranking = rank_sources(state, goals);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoUsableSource) throw;
    return Termination::kNotWorthCost;
  }
  const double theta = state.config.min_voi_per_cost;
  if (!(ranking.front().gain_per_cost >= theta)) return Termination::kNotWorthCost;

  if (state.config.max_queries && state.queries >= *state.config.max_queries) return Termination::kForced;
  if (state.config.budget) {
    const double remaining = *state.config.budget - state.spent;
    const bool affordable = std::any_of(ranking.begin(), ranking.end(), [&](const RankedSource& r) {
      return r.gain_per_cost >= theta && r.cost <= remaining;
    });
    if (!affordable) return Termination::kForced;
  }
  return Termination::kContinue;
}

namespace {

CommitmentReport commitment_for(const AssessmentState& state, Termination reason) {
  CommitmentReport report;
  report.reason = reason;
  report.spent = state.spent;
  report.queries = state.queries;
  report.findings = state.beliefs.ledger();
  const CompiledNetwork& net = state.network();
  for (std::size_t v = 0; v < net.size(); ++v) {
    if (!net.node(v).target) continue;
    const auto bel = state.beliefs.beliefs(v);
    CommitmentEntry entry;
    entry.node = net.node(v).id;
    entry.beliefs.assign(bel.begin(), bel.end());
    entry.argmax = static_cast<std::size_t>(std::max_element(bel.begin(), bel.end()) - bel.begin());
    entry.belief = bel[entry.argmax];
    if (entry.belief >= state.config.commit_threshold) entry.state = net.node(v).states[entry.argmax];
    report.entries.push_back(std::move(entry));
  }
  for (const auto& h : classify_hypotheses(state)) {
    if (h.status == HypothesisState::kUncertain) report.residual.push_back(h);
  }
  return report;
}

}  // namespace

CommitmentReport compose_commitment(const AssessmentState& state) {
  const Termination reason = check_termination(state);
  if (reason == Termination::kContinue) {
    throw Error(ErrorCode::kNotTerminated, "information acquisition has not terminated");
  }
  return commitment_for(state, reason);
}

CycleResult run_cycle(AssessmentState state, const Executor& executor) {
  std::size_t invocations = 0;
  // Each pass observes a new node or retires a failing source.
  const std::size_t guard = state.sources.size() + state.network().size() + 1;
  Termination reason = Termination::kContinue;
  for (std::size_t pass = 0; pass <= guard; ++pass) {
    reason = check_termination(state);
    if (reason != Termination::kContinue) break;

    state.goals = set_goals(state);
    const auto ranking = rank_sources(state, state.goals);
    const double remaining =
        state.config.budget ? *state.config.budget - state.spent : std::numeric_limits<double>::infinity();
    auto pick = std::find_if(ranking.begin(), ranking.end(), [&](const RankedSource& r) {
      return r.gain_per_cost >= state.config.min_voi_per_cost && r.cost <= remaining;
    });
    if (pick == ranking.end()) {
      reason = Termination::kForced;
      break;
    }
    state.record("goals", {{"goals", json_io::goals_to_json(state.goals)},
                           {"ranking", json_io::ranking_to_json(ranking)},
                           {"selected", pick->source_id}});

    auto [invoked, pending] = invoke_source(state, pick->source_id);
    state = std::move(invoked);
    ++invocations;
    const InformationSource& source = *state.find_source(pick->source_id);
    const std::size_t observed_before = state.beliefs.ledger().size();
    try {
      const auto findings = executor(source, pending, state);
      const auto sorted = sort_findings(state, findings);
      state.record("findings", {{"source", source.id}, {"sorted", json_io::sorted_findings_to_json(state.network(), sorted)}});
      state = integrate(state, findings).first;
    } catch (const std::exception& e) {
      state.record("executor_error", {{"source", source.id}, {"error", e.what()}});
    }
    if (state.beliefs.ledger().size() == observed_before) state.failed_sources.push_back(source.id);
  }
  if (reason == Termination::kContinue) reason = Termination::kForced;
  state.record("termination", {{"reason", to_string(reason)}, {"invocations", invocations}});
  CommitmentReport report = commitment_for(state, reason);
  state.record("commitment", json_io::commitment_to_json(state.network(), report));
  return {std::move(state), std::move(report), invocations};
}

Executor make_world_executor(fixtures::WorldAssignment world, std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [world = std::move(world), rng](const InformationSource& source, const std::vector<std::string>& pending,
                                         const AssessmentState&) {
    std::vector<Evidence> out;
    for (const auto& node : pending) {
      const std::size_t truth = world.at(node);
      auto confusion = source.reliability.find(node);
      if (confusion == source.reliability.end()) {
        out.push_back(Evidence::hard(node, truth));
        continue;
      }
      const auto& row = confusion->second[truth];
      std::discrete_distribution<std::size_t> report(row.begin(), row.end());
      const std::size_t r = report(*rng);
      std::vector<double> column;
      for (const auto& true_row : confusion->second) column.push_back(true_row[r]);
      out.push_back(Evidence::virtual_finding(node, std::move(column)));
    }
    return out;
  };
}

}  // namespace evr
