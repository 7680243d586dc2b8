#include <doctest.h>

#include <algorithm>
#include <limits>

#include "evr/assessment.hpp"
#include "evr/error.hpp"
#include "evr/fixtures.hpp"
#include "helpers.hpp"

using namespace evr;
using doctest::Approx;
using evr::test::make_node;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kParse;
}

AssessmentState session(const Network& net, CycleConfig config = {}, std::vector<Evidence> initial = {},
                        std::optional<std::vector<InformationSource>> sources = std::nullopt) {
  const CompiledNetwork c = CompiledNetwork::compile(net);
  auto src = sources ? *sources : default_sources(c);
  return start_session(c, config, std::move(src), initial);
}

Network single_root(std::vector<double> prior) {
  std::vector<std::string> states;
  for (std::size_t i = 0; i < prior.size(); ++i) states.push_back("s" + std::to_string(i));
  Node n = make_node("R", states, {}, {prior});
  n.target = true;
  return Network{"root", {n}};
}

// H (uniform) with a perfect copy E, a noisy child N, and an unrelated
// component Z -> W.
Network resolver_network() {
  Node h = make_node("H", {"h", "not_h"}, {}, {{0.5, 0.5}});
  Node e = make_node("E", {"e", "not_e"}, {"H"}, {{1.0, 0.0}, {0.0, 1.0}});
  Node n = make_node("N", {"n", "not_n"}, {"H"}, {{0.7, 0.3}, {0.3, 0.7}});
  Node z = make_node("Z", {"z", "not_z"}, {}, {{0.3, 0.7}});
  Node w = make_node("W", {"w", "not_w"}, {"Z"}, {{0.9, 0.1}, {0.2, 0.8}});
  h.target = true;
  e.observable = n.observable = w.observable = true;
  return Network{"resolver", {h, e, n, z, w}};
}

}  // namespace

TEST_CASE("start_session") {
  const Network e = fixtures::build_case("e");
  const AssessmentState s = session(e);
  const BeliefState prior = BeliefState::initialize(CompiledNetwork::compile(e));
  for (std::size_t v = 0; v < s.network().size(); ++v) CHECK(test::max_abs_diff(s.beliefs.beliefs(v), prior.beliefs(v)) == 0.0);
  REQUIRE_FALSE(s.trace.empty());
  CHECK(s.trace.front().kind == "start");

  SUBCASE("battlefield X1") {
    const Network f = fixtures::build_case("f");
    const std::vector<Evidence> x1 = {Evidence::hard("X1", 0)};
    const AssessmentState sf = session(f, {}, x1);
    const CompiledNetwork cf = CompiledNetwork::compile(f);
    const auto oracle = enumerate_posteriors(cf, x1);
    CHECK(test::max_abs_diff(sf.beliefs.beliefs("TYPE"), oracle.at("TYPE")) < 1e-9);
    CHECK(test::max_abs_diff(sf.beliefs.beliefs("TYPE"), BeliefState::initialize(cf).beliefs("TYPE")) > 1e-4);
  }
  SUBCASE("contradiction names the finding") {
    Network n = test::chain_network();
    n.nodes[1].cpt = {{1.0, 0.0}, {1.0, 0.0}};
    try {
      (void)session(n, {}, {Evidence::hard("E", 1)});
      FAIL("expected contradiction");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::kZeroProbabilityEvidence);
      CHECK(err.subject().find("E") != std::string::npos);
    }
  }
  SUBCASE("hard findings need observable nodes; virtual ones do not") {
    CHECK(code_of([&] { (void)session(e, {}, {Evidence::hard("burglary", 0)}); }) == ErrorCode::kUnobservableFinding);
    CHECK_NOTHROW((void)session(e, {}, {Evidence::virtual_finding("burglary", {0.8, 0.2})}));
  }
  SUBCASE("bad config and sources") {
    CycleConfig bad;
    bad.verify_threshold = 0.5;
    CHECK(code_of([&] { (void)session(e, bad); }) == ErrorCode::kInvalidConfig);
    bad = {};
    bad.min_voi_per_cost = 0.0;
    CHECK(code_of([&] { (void)session(e, bad); }) == ErrorCode::kInvalidConfig);
    std::vector<InformationSource> src = {{"s", {"burglary"}, 1.0, {}}};
    CHECK(code_of([&] { (void)session(e, {}, {}, src); }) == ErrorCode::kInvalidSource);
    src = {{"s", {"call"}, 1.0, {{"call", {{0.9, 0.2}, {0.1, 0.9}}}}}};
    CHECK(code_of([&] { (void)session(e, {}, {}, src); }) == ErrorCode::kInvalidSource);
  }
}

TEST_CASE("classify_hypotheses") {
  auto statuses = classify_hypotheses(session(single_root({0.97, 0.03})));
  REQUIRE(statuses.size() == 2);
  CHECK(statuses[0].status == HypothesisState::kVerified);
  CHECK(statuses[1].status == HypothesisState::kRefuted);

  statuses = classify_hypotheses(session(single_root({0.25, 0.25, 0.25, 0.25})));
  CHECK(std::all_of(statuses.begin(), statuses.end(),
                    [](const auto& h) { return h.status == HypothesisState::kUncertain; }));

  statuses = classify_hypotheses(session(single_root({0.95, 0.05})));
  CHECK(statuses[0].status == HypothesisState::kVerified);
  CHECK(statuses[1].status == HypothesisState::kRefuted);
}

TEST_CASE("set_goals") {
  CHECK(set_goals(session(single_root({0.97, 0.03}))).empty());

  const GoalSet half = set_goals(session(single_root({0.5, 0.5})));
  REQUIRE(half.size() == 1);
  CHECK(half[0].score == Approx(0.5).epsilon(1e-12));
  CHECK(half[0].kind == GoalKind::kDifferentiate);

  SUBCASE("severity ranks") {
    Node a = make_node("a", {"attack", "none"}, {}, {{0.4, 0.6}});
    Node b = a;
    b.id = b.label = "b";
    a.target = b.target = true;
    b.severity = {2.0, 1.0};
    const GoalSet goals = set_goals(session(Network{"two", {a, b}}));
    REQUIRE(goals.size() == 2);
    CHECK(goals[0].nodes == std::vector<std::string>{"b"});

    // Scaling every severity keeps the order.
    a.severity = {3.0, 3.0};
    b.severity = {6.0, 3.0};
    const GoalSet scaled = set_goals(session(Network{"two", {a, b}}));
    CHECK(scaled[0].nodes == goals[0].nodes);
    CHECK(scaled[1].nodes == goals[1].nodes);
  }
  SUBCASE("ties break by prior incidence, then id") {
    Node a = make_node("b_node", {"x", "y"}, {}, {{0.4, 0.6}});
    Node b = make_node("a_node", {"x", "y"}, {}, {{0.6, 0.4}});
    a.target = b.target = true;
    const GoalSet goals = set_goals(session(Network{"tie", {a, b}}));
    REQUIRE(goals.size() == 2);
    CHECK(goals[0].score == goals[1].score);
    CHECK(goals[0].nodes.front() == "a_node");
  }
  SUBCASE("co-parents of a shared child merge") {
    const AssessmentState d = session(fixtures::build_case("d"), {}, {Evidence::hard("artillery_fire", 0)});
    const GoalSet goals = set_goals(d);
    REQUIRE_FALSE(goals.empty());
    CHECK(goals[0].kind == GoalKind::kDifferentiate);
    CHECK(goals[0].nodes.size() == 2);
  }
  SUBCASE("max_goals and determinism") {
    CycleConfig cfg;
    cfg.max_goals = 2;
    const AssessmentState f = session(fixtures::build_case("f"), cfg);
    const GoalSet g1 = set_goals(f);
    CHECK(g1.size() <= 2);
    CHECK(g1 == set_goals(f));
    for (const auto& g : g1) CHECK(g.score > 0.0);
  }
}

TEST_CASE("predictive_distribution") {
  const AssessmentState s = session(test::chain_network());
  const auto p = predictive_distribution(s, "E");
  CHECK(p[0] == Approx(0.26).epsilon(1e-12));
  CHECK(p[1] == Approx(0.74).epsilon(1e-12));
  const AssessmentState o = session(test::chain_network(), {}, {Evidence::hard("E", 0)});
  CHECK(code_of([&] { (void)predictive_distribution(o, "E"); }) == ErrorCode::kAlreadyObserved);
}

TEST_CASE("rank_sources") {
  const std::vector<InformationSource> sources = {
      {"copy", {"E"}, 1.0, {}},
      {"copy_dear", {"E"}, 2.0, {}},
      {"noisy", {"N"}, 1.0, {}},
      {"unrelated", {"W"}, 1.0, {}},
      {"garbled_copy", {"E"}, 1.0, {{"E", {{0.8, 0.2}, {0.2, 0.8}}}}},
  };
  const AssessmentState s = session(resolver_network(), {}, {}, sources);
  const GoalSet goals = set_goals(s);
  REQUIRE(goals.size() == 1);
  const auto ranking = rank_sources(s, goals);
  REQUIRE(ranking.size() == 5);
  auto find = [&](const std::string& id) {
    return *std::find_if(ranking.begin(), ranking.end(), [&](const auto& r) { return r.source_id == id; });
  };
  CHECK(find("copy").expected_gain == Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(find("unrelated").expected_gain) <= 1e-12);
  CHECK(find("copy_dear").expected_gain == find("copy").expected_gain);
  CHECK(ranking[0].source_id == "copy");
  CHECK(ranking[1].source_id == "copy_dear");
  // A binary symmetric channel with 0.2 crossover leaves 1 - H(0.2) bits.
  const double h02 = -(0.2 * std::log2(0.2) + 0.8 * std::log2(0.8));
  CHECK(find("garbled_copy").expected_gain == Approx(1.0 - h02).epsilon(1e-9));
  CHECK(find("noisy").expected_gain < find("garbled_copy").expected_gain);
  for (const auto& r : ranking) CHECK(r.expected_gain >= -1e-9);
  CHECK(rank_sources(s, goals).size() == ranking.size());

  SUBCASE("scaling every cost keeps the order") {
    auto scaled = sources;
    for (auto& src : scaled) src.cost *= 3.7;
    const AssessmentState t = session(resolver_network(), {}, {}, scaled);
    const auto r2 = rank_sources(t, set_goals(t));
    for (std::size_t i = 0; i < r2.size(); ++i) CHECK(r2[i].source_id == ranking[i].source_id);
  }
  SUBCASE("zero cost ranks first") {
    auto free = sources;
    free.push_back({"free", {"N"}, 0.0, {}});
    const AssessmentState t = session(resolver_network(), {}, {}, free);
    const auto r2 = rank_sources(t, set_goals(t));
    CHECK(r2[0].source_id == "free");
    CHECK(r2[0].gain_per_cost == std::numeric_limits<double>::infinity());
  }
  SUBCASE("no usable source") {
    const AssessmentState t = session(resolver_network(), {}, {Evidence::hard("E", 0), Evidence::hard("N", 0),
                                                                Evidence::hard("W", 0)}, sources);
    CHECK(code_of([&] { (void)rank_sources(t, goals); }) == ErrorCode::kNoUsableSource);
  }
}

TEST_CASE("sort_findings") {
  const AssessmentState s = session(resolver_network());
  const std::vector<Evidence> incoming = {Evidence::hard("E", 0), Evidence::hard("W", 1)};
  const auto sorted = sort_findings(s, incoming);
  REQUIRE(sorted.size() == incoming.size());
  CHECK(sorted[0].goal_relevant);
  CHECK(sorted[0].tag == FindingTag::kGoal);
  CHECK(sorted[0].relevant_targets == std::vector<std::string>{"H"});
  REQUIRE_FALSE(sorted[0].newly_triggered.empty());
  CHECK(sorted[1].tag == FindingTag::kLateral);
  CHECK(sorted[1].relevant_targets.empty());

  SUBCASE("lateral component with its own target") {
    Network n = resolver_network();
    n.nodes[3].target = true;  // Z
    AssessmentState u = start_session(CompiledNetwork::compile(n), {}, {}, {});
    u.goals = {Goal{GoalKind::kVerify, {"H"}, {0}, 1.0, ""}};
    const auto lateral = sort_findings(u, {Evidence::hard("W", 0)});
    CHECK(lateral[0].tag == FindingTag::kLateral);
    CHECK(lateral[0].relevant_targets == std::vector<std::string>{"Z"});
  }
  SUBCASE("hard evidence blocks reachability") {
    const AssessmentState t = session(resolver_network(), {}, {Evidence::hard("E", 0)});
    // E is hard-observed but N still reaches H directly.
    const auto r = sort_findings(t, {Evidence::hard("N", 0)});
    CHECK(r[0].relevant_targets == std::vector<std::string>{"H"});
  }
  SUBCASE("preview errors are reported, finding kept") {
    const AssessmentState t = session(resolver_network(), {}, {Evidence::hard("E", 0)});
    const auto r = sort_findings(t, {Evidence::hard("E", 1)});
    REQUIRE(r.size() == 1);
    CHECK(r[0].preview_error == "ERR_DUPLICATE_EVIDENCE");
  }
  CHECK(code_of([&] { (void)sort_findings(s, {Evidence::hard("ghost", 0)}); }) == ErrorCode::kNoSuchNode);
}

TEST_CASE("integrate") {
  const AssessmentState s = session(resolver_network());
  SUBCASE("empty") {
    const auto [next, delta] = integrate(s, {});
    CHECK(next.trace.size() == s.trace.size());
    CHECK(next.beliefs.ledger().empty());
    for (const auto& [node, d] : delta.changes)
      for (double x : d) CHECK(x == 0.0);
    CHECK(delta.status_changes.empty());
  }
  SUBCASE("duplicate virtual finding") {
    const auto lik = Evidence::virtual_finding("N", {0.9, 0.4});
    const auto [next, delta] = integrate(s, {lik});
    CHECK(code_of([&] { (void)integrate(next, {lik}); }) == ErrorCode::kDuplicateEvidence);
    CHECK(code_of([&] { (void)integrate(s, {lik, lik}); }) == ErrorCode::kDuplicateEvidence);
  }
  SUBCASE("two conditionally independent children") {
    const std::vector<Evidence> both = {Evidence::virtual_finding("N", {0.9, 0.4}), Evidence::hard("E", 0)};
    const auto [next, delta] = integrate(s, both);
    const auto oracle = enumerate_posteriors(s.network(), both);
    CHECK(test::max_abs_diff(next.beliefs, oracle) < 1e-12);
    CHECK(next.trace.back().kind == "integrate");
    CHECK(delta.changes.at("H")[0] == Approx(oracle.at("H")[0] - 0.5).epsilon(1e-12));
    REQUIRE_FALSE(delta.status_changes.empty());
    CHECK(delta.status_changes[0].to == HypothesisState::kVerified);
  }
  SUBCASE("zero probability leaves the state alone") {
    const std::vector<Evidence> bad = {Evidence::hard("N", 0), Evidence::virtual_finding("E", {1, 0}),
                                       Evidence::virtual_finding("H", {0, 1})};
    CHECK(code_of([&] { (void)integrate(s, bad); }) == ErrorCode::kZeroProbabilityEvidence);
    CHECK(s.beliefs.ledger().empty());
  }
}

TEST_CASE("invoke_source") {
  const AssessmentState s = session(resolver_network());
  const auto [next, pending] = invoke_source(s, "E");
  CHECK(pending == std::vector<std::string>{"E"});
  CHECK(next.spent == 1.0);
  CHECK(next.queries == 1);
  CHECK(next.trace.back().kind == "invoke");
  CHECK(code_of([&] { (void)invoke_source(s, "nope"); }) == ErrorCode::kNoSuchSource);
  const AssessmentState o = session(resolver_network(), {}, {Evidence::hard("E", 0)});
  CHECK(code_of([&] { (void)invoke_source(o, "E"); }) == ErrorCode::kSourceExhausted);
}

TEST_CASE("check_termination and compose_commitment") {
  const AssessmentState resolved = session(single_root({0.97, 0.03}));
  CHECK(check_termination(resolved) == Termination::kResolved);
  const CommitmentReport r = compose_commitment(resolved);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].state == std::optional<std::string>("s0"));
  CHECK(r.reason == Termination::kResolved);

  // Uncertain target with nothing left to ask.
  const AssessmentState exhausted = session(resolver_network(), {}, {Evidence::hard("N", 0), Evidence::hard("W", 0),
                                                                      Evidence::virtual_finding("E", {0.6, 0.4})});
  CHECK(check_termination(exhausted) == Termination::kNotWorthCost);

  CycleConfig broke;
  broke.budget = 0.0;
  const AssessmentState forced = session(resolver_network(), broke);
  CHECK(check_termination(forced) == Termination::kForced);
  const CommitmentReport fr = compose_commitment(forced);
  CHECK(fr.reason == Termination::kForced);
  CHECK_FALSE(fr.entries[0].state.has_value());
  CHECK(fr.residual.size() == 2);

  CycleConfig few;
  few.max_queries = 1;
  AssessmentState q = session(resolver_network(), few);
  CHECK(check_termination(q) == Termination::kContinue);
  CHECK(code_of([&] { (void)compose_commitment(q); }) == ErrorCode::kNotTerminated);
  q = invoke_source(q, "N").first;
  CHECK(check_termination(q) == Termination::kForced);

  CycleConfig picky;
  picky.min_voi_per_cost = std::numeric_limits<double>::infinity();
  CHECK(check_termination(session(resolver_network(), picky)) == Termination::kNotWorthCost);

  SUBCASE("(0.6, 0.4) after FORCED stays unresolved") {
    const AssessmentState t = session(single_root({0.6, 0.4}), broke);
    const CommitmentReport c = compose_commitment(t);
    CHECK_FALSE(c.entries[0].state.has_value());
  }
  SUBCASE("burglary fixture commits to earthquake") {
    const Network e = fixtures::build_case("e");
    const CompiledNetwork ce = CompiledNetwork::compile(e);
    const std::vector<Evidence> findings = {Evidence::hard("alarm", 0), Evidence::hard("earthquake", 0),
                                            Evidence::hard("radio", 0)};
    const AssessmentState t = session(e, {}, findings);
    const auto oracle = enumerate_posteriors(ce, findings);
    CHECK(oracle.at("burglary")[1] >= 0.9);
    const CommitmentReport c = compose_commitment(t);
    for (const auto& entry : c.entries) {
      if (entry.node == "earthquake") CHECK(entry.state == std::optional<std::string>("true"));
      if (entry.node == "burglary") CHECK(entry.state == std::optional<std::string>("false"));
    }
  }
}

TEST_CASE("run_cycle") {
  SUBCASE("free perfect sources on deterministic CPTs") {
    Network n = test::chain_network();
    n.nodes[0].cpt = {{0.3, 0.7}};
    n.nodes[1].cpt = {{1.0, 0.0}, {0.0, 1.0}};
    const CompiledNetwork c = CompiledNetwork::compile(n);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto world = fixtures::sample_world(c, seed);
      AssessmentState s = start_session(c, {}, default_sources(c, false), {});
      s.sources[0].cost = 0.0;
      const CycleResult r = run_cycle(s, make_world_executor(world, seed));
      CHECK(r.report.reason == Termination::kResolved);
      CHECK(r.report.entries[0].argmax == world.at("H"));
      CHECK(r.report.entries[0].state.has_value());
    }
  }
  SUBCASE("theta infinite never invokes") {
    CycleConfig cfg;
    cfg.min_voi_per_cost = std::numeric_limits<double>::infinity();
    const AssessmentState s = session(fixtures::build_case("a"), cfg);
    const CycleResult r = run_cycle(s, make_world_executor(fixtures::sample_world(s.network(), 1), 1));
    CHECK(r.report.reason == Termination::kNotWorthCost);
    CHECK(r.invocations == 0);
    CHECK(r.state.trace.back().kind == "commitment");
  }
  SUBCASE("case (a), seed 42, committed class matches the oracle replay") {
    const CompiledNetwork c = CompiledNetwork::compile(fixtures::build_case("a"));
    const AssessmentState s = start_session(c, {}, default_sources(c, true), {});
    const CycleResult r = run_cycle(s, make_world_executor(fixtures::sample_world(c, 42), 42));
    CHECK(r.invocations <= 6);
    const auto oracle = enumerate_posteriors(c, r.report.findings);
    const auto& cls = oracle.at("class");
    const auto argmax = static_cast<std::size_t>(std::max_element(cls.begin(), cls.end()) - cls.begin());
    CHECK(r.report.entries[0].argmax == argmax);
    if (r.report.entries[0].state) CHECK(cls[argmax] >= 0.9);
    CHECK(r.state.spent == Approx(static_cast<double>(r.invocations)));
  }
  SUBCASE("garbled reports arrive as virtual findings") {
    const CompiledNetwork c = CompiledNetwork::compile(resolver_network());
    std::vector<InformationSource> src = {{"spy", {"E"}, 1.0, {{"E", {{0.9, 0.1}, {0.1, 0.9}}}}}};
    const AssessmentState s = start_session(c, {}, src, {});
    const CycleResult r = run_cycle(s, make_world_executor(fixtures::sample_world(c, 3), 3));
    REQUIRE(r.invocations == 1);
    REQUIRE(r.report.findings.size() == 1);
    CHECK_FALSE(r.report.findings[0].is_hard());
  }
  SUBCASE("executor failures are traced and retire the source") {
    const AssessmentState s = session(resolver_network());
    const Executor broken = [](const InformationSource&, const std::vector<std::string>&,
                               const AssessmentState&) -> std::vector<Evidence> {
      throw std::runtime_error("channel down");
    };
    const CycleResult r = run_cycle(s, broken);
    CHECK(r.report.reason == Termination::kNotWorthCost);
    CHECK(r.state.failed_sources.size() == r.invocations);
    CHECK(std::any_of(r.state.trace.begin(), r.state.trace.end(),
                      [](const TraceEvent& e) { return e.kind == "executor_error"; }));
  }
  SUBCASE("halts within the observable count on every fixture") {
    for (char id : fixtures::kCaseIds) {
      const CompiledNetwork c = CompiledNetwork::compile(fixtures::build_case(std::string(1, id)));
      std::size_t observables = 0;
      for (std::size_t v = 0; v < c.size(); ++v) observables += c.node(v).observable;
      const AssessmentState s = start_session(c, {}, default_sources(c), {});
      const CycleResult r = run_cycle(s, make_world_executor(fixtures::sample_world(c, 11), 11));
      CAPTURE(id);
      CHECK(r.invocations <= observables);
      CHECK(r.report.reason != Termination::kContinue);
    }
  }
}
