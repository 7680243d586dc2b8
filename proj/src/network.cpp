#include "evr/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "evr/error.hpp"

namespace evr {

const Node* Network::find(std::string_view node_id) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const Node& n) { return n.id == node_id; });
  return it == nodes.end() ? nullptr : &*it;
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue& i) { return i.code == code; });
}

std::string_view to_string(NodeCategory category) {
  switch (category) {
    case NodeCategory::kRoot: return "ROOT";
    case NodeCategory::kIntermediate: return "INTERMEDIATE";
    case NodeCategory::kObservableLeaf: return "OBSERVABLE_LEAF";
  }
  return "?";
}

std::size_t parent_config_index(std::span<const std::size_t> parent_state_counts,
                                std::span<const std::size_t> assignment) {
  if (assignment.size() != parent_state_counts.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "assignment length " + std::to_string(assignment.size()) +
                                                 " does not match " + std::to_string(parent_state_counts.size()) +
                                                 " parents");
  }
  std::size_t index = 0;
  for (std::size_t k = 0; k < assignment.size(); ++k) {
    if (assignment[k] >= parent_state_counts[k]) {
      throw Error(ErrorCode::kIndexOutOfRange, "component " + std::to_string(k) + " = " +
                                                   std::to_string(assignment[k]) + " exceeds radix " +
                                                   std::to_string(parent_state_counts[k]));
    }
    index = index * parent_state_counts[k] + assignment[k];
  }
  return index;
}

std::vector<std::size_t> parent_config_assignment(std::span<const std::size_t> parent_state_counts,
                                                  std::size_t index) {
  std::vector<std::size_t> assignment(parent_state_counts.size());
  for (std::size_t k = parent_state_counts.size(); k-- > 0;) {
    assignment[k] = index % parent_state_counts[k];
    index /= parent_state_counts[k];
  }
  if (index != 0) throw Error(ErrorCode::kIndexOutOfRange, "row index exceeds configuration count");
  return assignment;
}

void apply_structural_defaults(Network& network, std::span<const NodeDefaults> given) {
  std::set<std::string> has_children;
  for (const auto& n : network.nodes) {
    for (const auto& p : n.parents) has_children.insert(p);
  }
  for (std::size_t i = 0; i < network.nodes.size(); ++i) {
    Node& n = network.nodes[i];
    const NodeDefaults flags = i < given.size() ? given[i] : NodeDefaults{};
    if (!flags.observable_given) n.observable = !has_children.contains(n.id);
    if (!flags.target_given) n.target = n.parents.empty();
    if (n.severity.empty()) n.severity.assign(n.states.size(), 1.0);
  }
}

namespace {

class ReportBuilder {
 public:
  void error(std::string code, std::string subject, std::string message) {
    report_.issues.push_back({std::move(code), std::move(subject), std::move(message), Severity::kError});
    report_.ok = false;
  }
  void warning(std::string code, std::string subject, std::string message) {
    report_.issues.push_back({std::move(code), std::move(subject), std::move(message), Severity::kWarning});
  }
  ValidationReport take() { return std::move(report_); }

 private:
  ValidationReport report_;
};

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void check_node_local(const Node& n, ReportBuilder& out) {
  if (n.id.empty()) out.error("ERR_EMPTY_ID", "", "node with empty id");
  if (n.states.size() < 2) {
    out.error("ERR_TOO_FEW_STATES", n.id, "node needs at least 2 states, has " + std::to_string(n.states.size()));
  }
  std::set<std::string> seen;
  for (const auto& s : n.states) {
    if (!seen.insert(s).second) out.error("ERR_DUPLICATE_STATE", n.id, "state '" + s + "' repeated");
  }
  if (n.severity.size() != n.states.size()) {
    out.error("ERR_SEVERITY_SHAPE", n.id,
              "severity has " + std::to_string(n.severity.size()) + " entries for " +
                  std::to_string(n.states.size()) + " states");
  }
  for (double s : n.severity) {
    if (!(s >= 0.0) || !std::isfinite(s)) out.error("ERR_NEGATIVE_WEIGHT", n.id, "severity " + format_double(s));
  }
  if (!(n.observation_cost >= 0.0) || !std::isfinite(n.observation_cost)) {
    out.error("ERR_NEGATIVE_WEIGHT", n.id, "observation_cost " + format_double(n.observation_cost));
  }
  if (!(n.urgency >= 0.0) || !std::isfinite(n.urgency)) {
    out.error("ERR_NEGATIVE_WEIGHT", n.id, "urgency " + format_double(n.urgency));
  }
}

void check_cpt(const Node& n, std::size_t expected_rows, ReportBuilder& out) {
  if (n.cpt.size() != expected_rows) {
    out.error("ERR_CPT_SHAPE", n.id,
              "cpt has " + std::to_string(n.cpt.size()) + " rows, expected " + std::to_string(expected_rows));
  }
  for (std::size_t r = 0; r < n.cpt.size(); ++r) {
    const auto& row = n.cpt[r];
    const std::string subject = n.id + "#" + std::to_string(r);
    if (row.size() != n.states.size()) {
      out.error("ERR_CPT_SHAPE", subject,
                "row has " + std::to_string(row.size()) + " columns, expected " + std::to_string(n.states.size()));
      continue;
    }
    bool finite = true;
    for (double p : row) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        out.error("ERR_INVALID_PROBABILITY", subject, "entry " + format_double(p) + " outside [0,1]");
        finite = false;
      }
    }
    if (!finite) continue;
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(sum - 1.0) > kCptRowTolerance) {
      out.error("ERR_CPT_NORMALIZATION", subject, "row sums to " + format_double(sum));
    }
  }
}

// Kahn's algorithm; returns the topological order, or the nodes left on a
// directed cycle.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> kahn(
    const std::vector<std::vector<std::size_t>>& parents, const std::vector<std::vector<std::size_t>>& children) {
  const std::size_t n = parents.size();
  std::vector<std::size_t> indegree(n);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = parents[i].size();
  std::vector<std::size_t> ready;
  for (std::size_t i = n; i-- > 0;) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t c : children[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  std::vector<std::size_t> stuck;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] > 0) stuck.push_back(i);
  }
  return {order, stuck};
}

// Components of the undirected skeleton that contain a cycle, found by DFS:
// a non-tree edge to an already visited vertex closes a loop.
std::vector<std::vector<std::size_t>> loopy_components(const std::vector<std::set<std::size_t>>& adjacent) {
  const std::size_t n = adjacent.size();
  std::vector<int> component(n, -1);
  std::vector<std::vector<std::size_t>> loopy;
  int next = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    std::vector<std::size_t> members;
    bool loop = false;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, start}};
    component[start] = next;
    while (!stack.empty()) {
      auto [v, from] = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (std::size_t w : adjacent[v]) {
        if (w == from) continue;
        if (component[w] >= 0) {
          loop = true;
          continue;
        }
        component[w] = next;
        stack.emplace_back(w, v);
      }
    }
    if (loop) {
      std::sort(members.begin(), members.end());
      loopy.push_back(std::move(members));
    }
    ++next;
  }
  return loopy;
}

}  // namespace

ValidationReport validate(const Network& network) {
  ReportBuilder out;
  const std::size_t n = network.nodes.size();

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = network.nodes[i];
    if (!index.emplace(node.id, i).second) out.error("ERR_DUPLICATE_NODE", node.id, "node id used more than once");
    check_node_local(node, out);
  }

  std::vector<std::vector<std::size_t>> parents(n), children(n);
  std::vector<std::set<std::size_t>> adjacent(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = network.nodes[i];
    std::set<std::string> seen;
    bool all_known = true;
    std::size_t rows = 1;
    for (const auto& p : node.parents) {
      if (!seen.insert(p).second) {
        out.error("ERR_DUPLICATE_PARENT", node.id + "<-" + p, "parent listed twice");
        continue;
      }
      auto it = index.find(p);
      if (it == index.end()) {
        out.error("ERR_DANGLING_LINK", node.id + "<-" + p, "link names nonexistent node '" + p + "'");
        all_known = false;
        continue;
      }
      if (it->second == i) {
        out.error("ERR_CYCLE", node.id, "node is its own parent");
        continue;
      }
      parents[i].push_back(it->second);
      children[it->second].push_back(i);
      adjacent[i].insert(it->second);
      adjacent[it->second].insert(i);
      rows *= network.nodes[it->second].states.size();
    }
    if (all_known) check_cpt(node, rows, out);
  }

  auto [order, stuck] = kahn(parents, children);
  if (!stuck.empty()) {
    std::string names;
    for (std::size_t v : stuck) names += (names.empty() ? "" : ",") + network.nodes[v].id;
    out.error("ERR_CYCLE", network.nodes[stuck.front()].id, "directed cycle through {" + names + "}");
  }

  for (const auto& members : loopy_components(adjacent)) {
    std::string names;
    for (std::size_t v : members) names += (names.empty() ? "" : ",") + network.nodes[v].id;
    out.error("ERR_NOT_SINGLY_CONNECTED", network.nodes[members.front()].id,
              "undirected skeleton has a loop in component {" + names + "}");
  }

  if (std::none_of(network.nodes.begin(), network.nodes.end(), [](const Node& x) { return x.target; })) {
    out.warning("WARN_NO_TARGETS", network.id, "no target nodes; commitment will be empty");
  }
  return out.take();
}

CompiledNetwork CompiledNetwork::compile(Network network, Topology required) {
  ValidationReport report = validate(network);
  bool loopy = false;
  std::string blocking;
  for (const auto& issue : report.issues) {
    if (issue.severity != Severity::kError) continue;
    if (issue.code == "ERR_NOT_SINGLY_CONNECTED") {
      loopy = true;
      continue;
    }
    if (!blocking.empty()) blocking += "; ";
    blocking += issue.code + " " + issue.subject;
  }
  if (!blocking.empty()) throw Error(ErrorCode::kNotValidated, blocking, network.id);
  if (loopy && required == Topology::kPolytree) {
    throw Error(ErrorCode::kNotSinglyConnected, "message passing requires a singly connected network", network.id);
  }

  auto impl = std::make_shared<Impl>();
  const std::size_t n = network.nodes.size();
  impl->parents.resize(n);
  impl->children.resize(n);
  impl->radices.resize(n);
  impl->state_index.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    impl->index.emplace(network.nodes[i].id, i);
    for (std::size_t s = 0; s < network.nodes[i].states.size(); ++s) {
      impl->state_index[i].emplace(network.nodes[i].states[s], s);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : network.nodes[i].parents) {
      const std::size_t pi = impl->index.at(p);
      impl->parents[i].push_back(pi);
      impl->children[pi].push_back(i);
      impl->radices[i].push_back(network.nodes[pi].states.size());
    }
  }
  impl->topo = kahn(impl->parents, impl->children).first;
  impl->polytree = !loopy;
  impl->network = std::move(network);

  CompiledNetwork out;
  out.impl_ = std::move(impl);
  return out;
}

std::optional<std::size_t> CompiledNetwork::index_of(std::string_view node_id) const {
  auto it = impl_->index.find(std::string(node_id));
  if (it == impl_->index.end()) return std::nullopt;
  return it->second;
}

std::size_t CompiledNetwork::require(std::string_view node_id) const {
  if (auto i = index_of(node_id)) return *i;
  throw Error(ErrorCode::kNoSuchNode, "unknown node", std::string(node_id));
}

std::optional<std::size_t> CompiledNetwork::state_index(std::size_t node, std::string_view state) const {
  const auto& m = impl_->state_index[node];
  auto it = m.find(std::string(state));
  if (it == m.end()) return std::nullopt;
  return it->second;
}

NodeCategory CompiledNetwork::category(std::size_t node) const {
  if (impl_->parents[node].empty()) return NodeCategory::kRoot;
  if (impl_->children[node].empty() && node_at(node).observable) return NodeCategory::kObservableLeaf;
  return NodeCategory::kIntermediate;
}

}  // namespace evr
