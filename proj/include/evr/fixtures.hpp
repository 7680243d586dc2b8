#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "evr/network.hpp"

namespace evr::fixtures {

/// Shape of case (a); the other cases ignore it.
struct CaseOptions {
  std::size_t classes = 3;
  std::size_t indicators = 6;
};

inline constexpr std::string_view kCaseIds = "abcdef";

/// Canonical network for a taxonomy case:
///   a  one k-class root with n binary indicators (classification)
///   b  depth-3 tree, evidence at the leaves (cascaded inference)
///   c  6-state threat root with family structure (hierarchical hypotheses)
///   d  two co-existing binary hypotheses, private and shared children
///   e  burglary / earthquake / alarm (multiple causes, explaining away)
///   f  battlefield situation assessment, thinned to a polytree
/// Throws ERR_UNKNOWN_CASE.
Network build_case(std::string_view case_id, const CaseOptions& options = {});

/// Hypothesis families of case (c), as state indices of the `threat` node.
/// Known families: "benign", "A", "B", "threat". Throws ERR_UNKNOWN_CASE.
std::vector<std::size_t> threat_family(std::string_view family);

/// Likelihood vector over the `threat` states that is `inside` on every
/// member of the family and `outside` elsewhere.
std::vector<double> family_likelihood(std::string_view family, double inside, double outside);

/// Deterministic in `seed`. Uniform random labeled tree (Pruefer code) with
/// random edge directions; each node gets 2..max_states states and CPT rows
/// drawn from a flat Dirichlet.
Network random_polytree(std::uint64_t seed, std::size_t node_count, std::size_t max_states);

using WorldAssignment = std::map<std::string, std::size_t>;

/// Ancestral sample in topological order; deterministic in `seed`.
WorldAssignment sample_world(const CompiledNetwork& network, std::uint64_t seed);

}  // namespace evr::fixtures
