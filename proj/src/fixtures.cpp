#include "evr/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evr/error.hpp"

namespace evr::fixtures {

namespace {

using Rows = std::vector<std::vector<double>>;

void add(Network& net, std::string id, std::string label, std::vector<std::string> states,
         std::vector<std::string> parents, Rows cpt) {
  Node node;
  node.id = std::move(id);
  node.label = std::move(label);
  node.states = std::move(states);
  node.parents = std::move(parents);
  node.cpt = std::move(cpt);
  net.nodes.push_back(std::move(node));
}

Node& at(Network& net, std::string_view id) {
  for (auto& n : net.nodes) {
    if (n.id == id) return n;
  }
  throw Error(ErrorCode::kNoSuchNode, "fixture node", std::string(id));
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Case (a): classical Bayesian classification.
Network classification(const CaseOptions& opt) {
  if (opt.classes < 2 || opt.indicators < 1) {
    throw Error(ErrorCode::kUnknownCase, "case a needs >=2 classes and >=1 indicator");
  }
  Network net;
  net.id = "case_a";
  std::vector<std::string> classes;
  std::vector<double> prior;
  const double weight_total = static_cast<double>(opt.classes * (opt.classes + 1)) / 2.0;
  for (std::size_t c = 0; c < opt.classes; ++c) {
    classes.push_back("C" + std::to_string(c + 1));
    prior.push_back(static_cast<double>(opt.classes - c) / weight_total);
  }
  add(net, "class", "Class of the observed situation", classes, {}, {prior});
  for (std::size_t j = 0; j < opt.indicators; ++j) {
    Rows rows;
    for (std::size_t c = 0; c < opt.classes; ++c) {
      // Golden-ratio stepping spreads the per-class rates over [0.05, 0.95].
      const double frac = std::fmod(0.6180339887 * static_cast<double>((c + 1) * (j + 2)) + 0.13 * j, 1.0);
      const double present = round2(0.05 + 0.9 * frac);
      rows.push_back({present, round2(1.0 - present)});
    }
    add(net, "x" + std::to_string(j + 1), "Indicator " + std::to_string(j + 1), {"present", "absent"}, {"class"},
        rows);
  }
  apply_structural_defaults(net, {});
  return net;
}

// Case (b): cascaded inference, depth 3.
Network cascaded() {
  Network net;
  net.id = "case_b";
  add(net, "situation", "Overall political situation", {"calm", "tense", "hostile"}, {}, {{0.6, 0.3, 0.1}});
  add(net, "mobilization", "Military mobilization under way", {"yes", "no"}, {"situation"},
      {{0.05, 0.95}, {0.4, 0.6}, {0.85, 0.15}});
  add(net, "rhetoric", "Official rhetoric", {"harsh", "mild"}, {"situation"}, {{0.1, 0.9}, {0.6, 0.4}, {0.8, 0.2}});
  add(net, "logistics", "Logistic preparations", {"active", "quiet"}, {"mobilization"}, {{0.8, 0.2}, {0.1, 0.9}});
  add(net, "rail_traffic", "Rail traffic toward the border", {"high", "normal"}, {"logistics"},
      {{0.9, 0.1}, {0.2, 0.8}});
  add(net, "fuel_purchases", "Bulk fuel purchases", {"high", "normal"}, {"logistics"}, {{0.7, 0.3}, {0.15, 0.85}});
  add(net, "reserve_callups", "Reserve call-ups", {"reported", "none"}, {"mobilization"},
      {{0.75, 0.25}, {0.05, 0.95}});
  add(net, "press_reports", "Tone of state press", {"hostile", "neutral"}, {"rhetoric"}, {{0.85, 0.15}, {0.2, 0.8}});
  add(net, "speeches", "Leadership speeches", {"aggressive", "moderate"}, {"rhetoric"}, {{0.7, 0.3}, {0.3, 0.7}});
  apply_structural_defaults(net, {});
  return net;
}

// Case (c): hierarchically structured hypotheses in one 6-state node.
Network threat_assessment() {
  Network net;
  net.id = "case_c";
  add(net, "threat", "Identity of the unknown object",
      {"benign", "threat_A1", "threat_A2", "threat_B1", "threat_B2", "threat_B3"}, {},
      {{0.5, 0.1, 0.1, 0.1, 0.1, 0.1}});
  add(net, "emitter", "Detected emitter class", {"none", "type_a", "type_b"}, {"threat"},
      {{0.9, 0.05, 0.05}, {0.2, 0.7, 0.1}, {0.3, 0.6, 0.1}, {0.2, 0.1, 0.7}, {0.15, 0.15, 0.7}, {0.3, 0.1, 0.6}});
  add(net, "speed", "Speed of the object", {"fast", "slow"}, {"threat"},
      {{0.3, 0.7}, {0.9, 0.1}, {0.6, 0.4}, {0.5, 0.5}, {0.8, 0.2}, {0.4, 0.6}});
  add(net, "approach", "Course relative to own forces", {"closing", "steady"}, {"threat"},
      {{0.2, 0.8}, {0.7, 0.3}, {0.8, 0.2}, {0.6, 0.4}, {0.65, 0.35}, {0.9, 0.1}});
  add(net, "iff", "IFF response", {"friendly", "silent"}, {"threat"},
      {{0.8, 0.2}, {0.05, 0.95}, {0.05, 0.95}, {0.05, 0.95}, {0.05, 0.95}, {0.05, 0.95}});
  apply_structural_defaults(net, {});
  at(net, "threat").severity = {0.1, 1.0, 1.0, 2.0, 2.0, 2.0};
  at(net, "threat").urgency = 2.0;
  at(net, "iff").observation_cost = 0.5;
  return net;
}

// Case (d): multiple non-competing hypotheses, each its own binary node.
Network multi_membership() {
  Network net;
  net.id = "case_d";
  add(net, "north_attacked", "Northern post will be attacked", {"yes", "no"}, {}, {{0.3, 0.7}});
  add(net, "south_attacked", "Southern post will be attacked", {"yes", "no"}, {}, {{0.2, 0.8}});
  add(net, "north_patrols", "Enemy patrols near the northern post", {"seen", "unseen"}, {"north_attacked"},
      {{0.8, 0.2}, {0.1, 0.9}});
  add(net, "south_patrols", "Enemy patrols near the southern post", {"seen", "unseen"}, {"south_attacked"},
      {{0.75, 0.25}, {0.15, 0.85}});
  add(net, "artillery_fire", "Preparatory artillery fire", {"heavy", "light"}, {"north_attacked", "south_attacked"},
      {{0.95, 0.05}, {0.7, 0.3}, {0.6, 0.4}, {0.05, 0.95}});
  apply_structural_defaults(net, {});
  return net;
}

// Case (e): multiple causes for one observation.
Network burglary() {
  Network net;
  net.id = "case_e";
  add(net, "burglary", "Burglary in progress", {"true", "false"}, {}, {{0.01, 0.99}});
  add(net, "earthquake", "Earthquake occurred", {"true", "false"}, {}, {{0.02, 0.98}});
  add(net, "alarm", "Alarm sounding", {"on", "off"}, {"burglary", "earthquake"},
      {{0.95, 0.05}, {0.94, 0.06}, {0.29, 0.71}, {0.001, 0.999}});
  add(net, "radio", "Radio reports an earthquake", {"announced", "silent"}, {"earthquake"},
      {{0.9, 0.1}, {0.001, 0.999}});
  add(net, "call", "Neighbor calls about the alarm", {"called", "silent"}, {"alarm"}, {{0.9, 0.1}, {0.05, 0.95}});
  apply_structural_defaults(net, {});
  // Intermediate nodes that can be checked directly, at a price.
  at(net, "alarm").observable = true;
  at(net, "alarm").observation_cost = 2.0;
  at(net, "earthquake").observable = true;
  at(net, "earthquake").observation_cost = 5.0;
  at(net, "burglary").severity = {2.0, 1.0};
  return net;
}

// Case (f): battlefield reading. Cross-links that would close undirected
// loops (terrain feeding tactics and deployment, capability depending on
// several thrust alternatives) are left out so the network stays singly
// connected. TARGET and DEPLOYMENT are binary (north/south sector) to keep
// the joint space at 2^20 for the enumeration oracle.
Network battlefield() {
  Network net;
  net.id = "case_f";
  add(net, "TYPE", "Type of attack", {"DELIBERATE", "HASTY", "SPOILING", "AMBUSH"}, {}, {{0.4, 0.3, 0.2, 0.1}});
  const std::vector<std::pair<std::string, std::vector<double>>> thrusts = {
      {"TANKS", {0.8, 0.5, 0.4, 0.1}},
      {"AIR", {0.7, 0.3, 0.2, 0.05}},
      {"MOBILE_INFANTRY", {0.6, 0.8, 0.5, 0.3}},
      {"PARACHUTES", {0.3, 0.1, 0.05, 0.05}},
      {"HELICOPTER_INFANTRY", {0.4, 0.2, 0.3, 0.2}},
  };
  for (const auto& [name, rates] : thrusts) {
    Rows rows;
    for (double r : rates) rows.push_back({r, round2(1.0 - r)});
    std::string label = "Thrust: " + name;
    std::replace(label.begin(), label.end(), '_', ' ');
    add(net, "THRUST_" + name, label, {"YES", "NO"}, {"TYPE"}, rows);
  }
  add(net, "TARGET", "Sector under attack", {"NORTHERN_SECTOR", "SOUTHERN_SECTOR"}, {}, {{0.6, 0.4}});
  add(net, "DEPLOYMENT", "Deployment of the attacking force", {"MASSED_NORTH", "MASSED_SOUTH"}, {"TYPE", "TARGET"},
      {{0.9, 0.1}, {0.15, 0.85}, {0.95, 0.05}, {0.5, 0.5}, {0.7, 0.3}, {0.3, 0.7}, {0.4, 0.6}, {0.1, 0.9}});
  add(net, "X1", "INCREASED ACTIVITY IN THE NORTHERN AREA", {"OBSERVED", "NOT_OBSERVED"}, {"DEPLOYMENT"},
      {{0.85, 0.15}, {0.2, 0.8}});
  add(net, "TERRAIN", "Terrain in the approach corridor", {"FOREST", "OPEN"}, {}, {{0.4, 0.6}});
  add(net, "COVER", "Available cover", {"DENSE", "SPARSE"}, {"TERRAIN"}, {{0.85, 0.15}, {0.2, 0.8}});
  add(net, "TRAFFICABILITY", "Trafficability for vehicles", {"GOOD", "POOR"}, {"TERRAIN"}, {{0.3, 0.7}, {0.8, 0.2}});
  add(net, "TACTICS", "Tactics of the attack", {"FRONTAL", "INFILTRATION"}, {"TYPE", "COVER"},
      {{0.6, 0.4}, {0.85, 0.15}, {0.7, 0.3}, {0.9, 0.1}, {0.5, 0.5}, {0.7, 0.3}, {0.1, 0.9}, {0.3, 0.7}});
  add(net, "TREE_HEIGHT", "Tree height", {"TALL", "LOW"}, {"COVER"}, {{0.8, 0.2}, {0.25, 0.75}});
  add(net, "TREE_DENSITY", "Tree density", {"THICK", "THIN"}, {"COVER"}, {{0.85, 0.15}, {0.1, 0.9}});
  add(net, "BOULDER_SIZE", "Boulder size", {"LARGE", "SMALL"}, {"TRAFFICABILITY"}, {{0.15, 0.85}, {0.7, 0.3}});
  add(net, "SOIL_TYPE", "Soil type", {"FIRM", "SOFT"}, {"TRAFFICABILITY"}, {{0.8, 0.2}, {0.25, 0.75}});
  add(net, "CAPABILITY", "River-crossing capability", {"CROSSING", "NO_CROSSING"}, {"THRUST_TANKS"},
      {{0.7, 0.3}, {0.2, 0.8}});
  add(net, "X2", "BRIDGING EQUIPMENT MOVED FORWARD", {"OBSERVED", "NOT_OBSERVED"}, {"CAPABILITY"},
      {{0.8, 0.2}, {0.05, 0.95}});
  apply_structural_defaults(net, {});

  for (std::string_view id : {"TYPE", "TARGET", "DEPLOYMENT", "TACTICS"}) at(net, id).target = true;
  for (const auto& [name, rates] : thrusts) at(net, "THRUST_" + name).target = true;
  at(net, "TERRAIN").target = false;
  at(net, "TYPE").severity = {3.0, 2.0, 2.0, 4.0};
  at(net, "TYPE").urgency = 2.0;
  at(net, "BOULDER_SIZE").observation_cost = 1.5;
  at(net, "SOIL_TYPE").observation_cost = 1.5;
  at(net, "X1").observation_cost = 3.0;
  at(net, "X2").observation_cost = 4.0;
  return net;
}

}  // namespace

Network build_case(std::string_view case_id, const CaseOptions& options) {
  if (case_id == "a") return classification(options);
  if (case_id == "b") return cascaded();
  if (case_id == "c") return threat_assessment();
  if (case_id == "d") return multi_membership();
  if (case_id == "e") return burglary();
  if (case_id == "f") return battlefield();
  throw Error(ErrorCode::kUnknownCase, "expected one of a..f", std::string(case_id));
}

std::vector<std::size_t> threat_family(std::string_view family) {
  if (family == "benign") return {0};
  if (family == "A") return {1, 2};
  if (family == "B") return {3, 4, 5};
  if (family == "threat") return {1, 2, 3, 4, 5};
  throw Error(ErrorCode::kUnknownCase, "unknown threat family", std::string(family));
}

std::vector<double> family_likelihood(std::string_view family, double inside, double outside) {
  std::vector<double> lk(6, outside);
  for (std::size_t s : threat_family(family)) lk[s] = inside;
  return lk;
}

Network random_polytree(std::uint64_t seed, std::size_t node_count, std::size_t max_states) {
  if (node_count == 0) throw Error(ErrorCode::kUnknownCase, "node_count must be >= 1");
  max_states = std::max<std::size_t>(max_states, 2);
  std::mt19937_64 rng(seed);

  // Decode a random Pruefer sequence into an undirected labeled tree.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (node_count == 2) {
    edges.emplace_back(0, 1);
  } else if (node_count > 2) {
    std::uniform_int_distribution<std::size_t> pick(0, node_count - 1);
    std::vector<std::size_t> code(node_count - 2);
    for (auto& c : code) c = pick(rng);
    std::vector<std::size_t> degree(node_count, 1);
    for (std::size_t c : code) ++degree[c];
    for (std::size_t c : code) {
      std::size_t leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      edges.emplace_back(leaf, c);
      --degree[leaf];
      --degree[c];
    }
    std::vector<std::size_t> last;
    for (std::size_t v = 0; v < node_count; ++v) {
      if (degree[v] == 1) last.push_back(v);
    }
    edges.emplace_back(last[0], last[1]);
  }

  std::uniform_int_distribution<std::size_t> states_dist(2, max_states);
  std::bernoulli_distribution coin(0.5);
  std::gamma_distribution<double> flat(1.0, 1.0);

  Network net;
  net.id = "random_" + std::to_string(seed);
  for (std::size_t v = 0; v < node_count; ++v) {
    Node node;
    node.id = "n" + std::to_string(v);
    node.label = node.id;
    const std::size_t k = states_dist(rng);
    for (std::size_t s = 0; s < k; ++s) node.states.push_back("s" + std::to_string(s));
    net.nodes.push_back(std::move(node));
  }
  std::vector<std::vector<std::size_t>> parents(node_count);
  for (auto [a, b] : edges) {
    if (coin(rng)) std::swap(a, b);
    parents[b].push_back(a);
  }
  for (std::size_t v = 0; v < node_count; ++v) {
    std::sort(parents[v].begin(), parents[v].end());
    Node& node = net.nodes[v];
    std::size_t rows = 1;
    for (std::size_t p : parents[v]) {
      node.parents.push_back(net.nodes[p].id);
      rows *= net.nodes[p].states.size();
    }
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(node.states.size());
      double sum = 0.0;
      for (double& x : row) {
        x = flat(rng) + 1e-6;
        sum += x;
      }
      for (double& x : row) x /= sum;
      node.cpt.push_back(std::move(row));
    }
  }
  apply_structural_defaults(net, {});
  return net;
}

WorldAssignment sample_world(const CompiledNetwork& network, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> world(network.size(), 0);
  std::vector<std::size_t> parent_states;
  for (std::size_t v : network.topological_order()) {
    parent_states.clear();
    for (std::size_t p : network.parents(v)) parent_states.push_back(world[p]);
    const auto& row = network.node(v).cpt[parent_config_index(network.parent_radices(v), parent_states)];
    const double u = unit(rng);
    double cumulative = 0.0;
    std::size_t chosen = row.size();
    std::size_t last_positive = 0;
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] > 0.0) last_positive = s;
      cumulative += row[s];
      if (chosen == row.size() && row[s] > 0.0 && u < cumulative) chosen = s;
    }
    world[v] = chosen == row.size() ? last_positive : chosen;
  }
  WorldAssignment out;
  for (std::size_t v = 0; v < network.size(); ++v) out.emplace(network.node(v).id, world[v]);
  return out;
}

}  // namespace evr::fixtures
