#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace evr {

/// A multi-valued proposition. States are mutually exclusive and exhaustive.
///
/// `cpt` holds one row per joint parent configuration (ordered by
/// parent_config_index, first parent most significant) and one column per
/// state. A root node's single row is its prior.
struct Node {
  std::string id;
  std::string label;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  std::vector<std::vector<double>> cpt;
  bool observable = false;
  bool target = false;
  double observation_cost = 1.0;
  std::vector<double> severity;  // per state
  double urgency = 1.0;

  bool operator==(const Node&) const = default;
};

struct Network {
  std::string id;
  std::vector<Node> nodes;

  const Node* find(std::string_view node_id) const;
  bool operator==(const Network&) const = default;
};

enum class Severity { kError, kWarning };

struct ValidationIssue {
  std::string code;     // e.g. "ERR_CPT_NORMALIZATION"
  std::string subject;  // node id, "child<-parent" link, or "node#row"
  std::string message;
  Severity severity = Severity::kError;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  bool has(std::string_view code) const;
};

enum class NodeCategory { kRoot, kIntermediate, kObservableLeaf };

std::string_view to_string(NodeCategory category);

inline constexpr double kCptRowTolerance = 1e-9;

/// Checks every structural and numeric invariant. Never throws; violations
/// are reported as issues with stable codes.
ValidationReport validate(const Network& network);

/// Mixed-radix row index, first parent most significant.
/// Throws ERR_INDEX_OUT_OF_RANGE.
std::size_t parent_config_index(std::span<const std::size_t> parent_state_counts,
                                std::span<const std::size_t> assignment);

/// Inverse of parent_config_index.
std::vector<std::size_t> parent_config_assignment(std::span<const std::size_t> parent_state_counts,
                                                  std::size_t index);

/// Fills the documented defaults that depend on graph structure:
/// observable = no children, target = no parents, severity = all 1.0.
/// Only applied to nodes whose flags were not given explicitly; callers pass
/// which fields were present.
struct NodeDefaults {
  bool observable_given = false;
  bool target_given = false;
};
void apply_structural_defaults(Network& network, std::span<const NodeDefaults> given);

enum class Topology {
  kPolytree,  // singly connected DAG (required for message passing)
  kDag,       // any DAG (enumeration oracle only)
};

/// Immutable, indexed view of a validated network. Cheap to copy; safe to
/// share across threads.
class CompiledNetwork {
 public:
  /// Validates and indexes. Throws ERR_NOT_VALIDATED listing the issues, or
  /// ERR_NOT_SINGLY_CONNECTED when a polytree was requested and the skeleton
  /// has a cycle.
  static CompiledNetwork compile(Network network, Topology required = Topology::kPolytree);

  const Network& network() const { return impl_->network; }
  std::size_t size() const { return impl_->network.nodes.size(); }
  const Node& node(std::size_t index) const { return impl_->network.nodes[index]; }
  std::optional<std::size_t> index_of(std::string_view node_id) const;
  /// Throws ERR_NO_SUCH_NODE.
  std::size_t require(std::string_view node_id) const;
  std::optional<std::size_t> state_index(std::size_t node, std::string_view state) const;

  std::size_t state_count(std::size_t node) const { return node_at(node).states.size(); }
  std::span<const std::size_t> parents(std::size_t node) const { return impl_->parents[node]; }
  std::span<const std::size_t> children(std::size_t node) const { return impl_->children[node]; }
  /// Radices of the parent configuration (state counts of each parent).
  std::span<const std::size_t> parent_radices(std::size_t node) const { return impl_->radices[node]; }
  std::span<const std::size_t> topological_order() const { return impl_->topo; }
  NodeCategory category(std::size_t node) const;
  bool is_polytree() const { return impl_->polytree; }

 private:
  struct Impl {
    Network network;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::unordered_map<std::string, std::size_t>> state_index;
    std::vector<std::vector<std::size_t>> parents;
    std::vector<std::vector<std::size_t>> children;
    std::vector<std::vector<std::size_t>> radices;
    std::vector<std::size_t> topo;
    bool polytree = false;
  };

  const Node& node_at(std::size_t i) const { return impl_->network.nodes[i]; }

  std::shared_ptr<const Impl> impl_;
};

}  // namespace evr
