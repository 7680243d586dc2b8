#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "evr/network.hpp"
#include "evr/propagation.hpp"

namespace evr::test {

inline Node make_node(std::string id, std::vector<std::string> states, std::vector<std::string> parents,
                      std::vector<std::vector<double>> cpt) {
  Node n;
  n.id = id;
  n.label = std::move(id);
  n.states = std::move(states);
  n.parents = std::move(parents);
  n.cpt = std::move(cpt);
  n.severity.assign(n.states.size(), 1.0);
  return n;
}

/// H -> E with P(h)=0.2, P(e|h)=0.9, P(e|~h)=0.1.
inline Network chain_network() {
  Node h = make_node("H", {"h", "not_h"}, {}, {{0.2, 0.8}});
  Node e = make_node("E", {"e", "not_e"}, {"H"}, {{0.9, 0.1}, {0.1, 0.9}});
  h.target = true;
  e.observable = true;
  return Network{"chain", {h, e}};
}

/// Diamond A->B, A->C, B->D, C->D.
inline Network diamond_network() {
  const std::vector<std::string> bin = {"t", "f"};
  Node a = make_node("A", bin, {}, {{0.3, 0.7}});
  Node b = make_node("B", bin, {"A"}, {{0.8, 0.2}, {0.1, 0.9}});
  Node c = make_node("C", bin, {"A"}, {{0.6, 0.4}, {0.2, 0.8}});
  Node d = make_node("D", bin, {"B", "C"}, {{0.99, 0.01}, {0.7, 0.3}, {0.5, 0.5}, {0.05, 0.95}});
  a.target = true;
  d.observable = true;
  return Network{"diamond", {a, b, c, d}};
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? worst : INFINITY;
}

inline double max_abs_diff(const BeliefState& state, const PosteriorMap& oracle) {
  double worst = 0.0;
  for (const auto& [node, vec] : oracle) worst = std::max(worst, max_abs_diff(state.beliefs(node), vec));
  return worst;
}

}  // namespace evr::test
