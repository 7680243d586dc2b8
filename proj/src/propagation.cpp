#include "evr/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evr/error.hpp"

namespace evr {

Evidence Evidence::hard(std::string node, std::size_t state) {
  Evidence e;
  e.kind = Kind::kHard;
  e.node = std::move(node);
  e.state = state;
  return e;
}

Evidence Evidence::virtual_finding(std::string node, std::vector<double> likelihood) {
  Evidence e;
  e.kind = Kind::kVirtual;
  e.node = std::move(node);
  e.likelihood = std::move(likelihood);
  return e;
}

std::vector<double> finding_likelihood(const CompiledNetwork& network, const Evidence& finding) {
  const std::size_t node = network.require(finding.node);
  const std::size_t k = network.state_count(node);
  if (finding.is_hard()) {
    if (finding.state >= k) {
      throw Error(ErrorCode::kInvalidEvidence,
                  "state index " + std::to_string(finding.state) + " out of range for " + std::to_string(k) + " states",
                  finding.node);
    }
    std::vector<double> indicator(k, 0.0);
    indicator[finding.state] = 1.0;
    return indicator;
  }
  if (finding.likelihood.size() != k) {
    throw Error(ErrorCode::kInvalidEvidence,
                "likelihood has " + std::to_string(finding.likelihood.size()) + " entries for " + std::to_string(k) +
                    " states",
                finding.node);
  }
  bool positive = false;
  for (double v : finding.likelihood) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::kInvalidEvidence, "likelihood must be finite and >= 0", finding.node);
    positive = positive || v > 0.0;
  }
  if (!positive) throw Error(ErrorCode::kInvalidEvidence, "likelihood needs a positive component", finding.node);
  return finding.likelihood;
}

double entropy_bits(std::span<const double> distribution) {
  double h = 0.0;
  for (double p : distribution) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

namespace {

void normalize_message(std::vector<double>& m) {
  const double sum = std::accumulate(m.begin(), m.end(), 0.0);
  if (sum > 0.0) {
    for (double& v : m) v /= sum;
  }
}

std::size_t slot_of(std::span<const std::size_t> parents, std::size_t parent) {
  return static_cast<std::size_t>(std::find(parents.begin(), parents.end(), parent) - parents.begin());
}

}  // namespace

BeliefState::BeliefState(CompiledNetwork network) : network_(std::move(network)) {
  const std::size_t n = network_.size();
  beliefs_.resize(n);
  pi_.resize(n);
  lambda_.resize(n);
  pi_to_child_.resize(n);
  lambda_to_parent_.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t p : network_.parents(v)) {
      pi_to_child_[v].emplace_back(network_.state_count(p), 1.0);
      lambda_to_parent_[v].emplace_back(network_.state_count(p), 1.0);
    }
  }
}

BeliefState BeliefState::initialize(CompiledNetwork network) {
  if (!network.is_polytree()) {
    throw Error(ErrorCode::kNotSinglyConnected, "message passing requires a singly connected network",
                network.network().id);
  }
  BeliefState state(std::move(network));
  state.propagate();
  return state;
}

const Evidence* BeliefState::evidence_on(std::string_view node) const {
  auto it = std::find_if(ledger_.begin(), ledger_.end(), [&](const Evidence& e) { return e.node == node; });
  return it == ledger_.end() ? nullptr : &*it;
}

bool BeliefState::hard_observed(std::size_t node) const {
  const Evidence* e = evidence_on(network_.node(node).id);
  return e != nullptr && e->is_hard();
}

std::span<const double> BeliefState::beliefs(std::string_view node) const {
  return beliefs_[network_.require(node)];
}

PosteriorMap BeliefState::all_beliefs() const {
  PosteriorMap out;
  for (std::size_t v = 0; v < network_.size(); ++v) out.emplace(network_.node(v).id, beliefs_[v]);
  return out;
}

BeliefState BeliefState::assert_evidence(const Evidence& finding) const {
  finding_likelihood(network_, finding);
  if (evidence_on(finding.node) != nullptr) {
    throw Error(ErrorCode::kDuplicateEvidence, "node already carries a finding; retract it first", finding.node);
  }
  BeliefState next = *this;
  next.ledger_.push_back(finding);
  try {
    next.propagate();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroProbabilityEvidence) throw;
    throw Error(ErrorCode::kZeroProbabilityEvidence, "finding contradicts the current evidence", finding.node);
  }
  return next;
}

BeliefState BeliefState::assert_all(std::span<const Evidence> findings) const {
  BeliefState next = *this;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    const Evidence& f = findings[i];
    const std::string subject = "finding[" + std::to_string(i) + "] " + f.node;
    try {
      finding_likelihood(network_, f);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), subject);
    }
    if (next.evidence_on(f.node) != nullptr) {
      throw Error(ErrorCode::kDuplicateEvidence, "node already carries a finding", subject);
    }
    next.ledger_.push_back(f);
  }
  try {
    next.propagate();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroProbabilityEvidence) throw;
    // Locate the first finding whose addition makes the ledger impossible.
    BeliefState probe = *this;
    for (std::size_t i = 0; i < findings.size(); ++i) {
      try {
        probe = probe.assert_evidence(findings[i]);
      } catch (const Error&) {
        throw Error(ErrorCode::kZeroProbabilityEvidence, "finding contradicts the evidence before it",
                    "finding[" + std::to_string(i) + "] " + findings[i].node);
      }
    }
    throw;
  }
  return next;
}

BeliefState BeliefState::retract_evidence(std::string_view node) const {
  auto it = std::find_if(ledger_.begin(), ledger_.end(), [&](const Evidence& e) { return e.node == node; });
  if (it == ledger_.end()) throw Error(ErrorCode::kNoSuchEvidence, "no finding on node", std::string(node));
  BeliefState next = *this;
  next.ledger_.erase(next.ledger_.begin() + (it - ledger_.begin()));
  next.propagate();
  return next;
}

void BeliefState::propagate() {
  const CompiledNetwork& net = network_;
  const std::size_t n = net.size();

  std::vector<std::vector<double>> local(n);
  for (std::size_t v = 0; v < n; ++v) local[v].assign(net.state_count(v), 1.0);
  for (const Evidence& e : ledger_) {
    const std::size_t v = net.require(e.node);
    const auto lk = finding_likelihood(net, e);
    for (std::size_t s = 0; s < lk.size(); ++s) local[v][s] *= lk[s];
  }

  // Causal support of v from its parents' messages.
  auto causal = [&](std::size_t v) {
    const Node& node = net.node(v);
    const auto radices = net.parent_radices(v);
    std::vector<double> out(net.state_count(v), 0.0);
    std::vector<std::size_t> cfg(radices.size(), 0);
    for (std::size_t row = 0; row < node.cpt.size(); ++row) {
      double weight = 1.0;
      for (std::size_t j = 0; j < cfg.size(); ++j) weight *= pi_to_child_[v][j][cfg[j]];
      if (weight != 0.0) {
        for (std::size_t x = 0; x < out.size(); ++x) out[x] += weight * node.cpt[row][x];
      }
      for (std::size_t j = cfg.size(); j-- > 0;) {
        if (++cfg[j] < radices[j]) break;
        cfg[j] = 0;
      }
    }
    return out;
  };

  // Diagnostic support of v from its own finding and its children, skipping
  // the child `except` (n = skip none).
  auto diagnostic = [&](std::size_t v, std::size_t except) {
    std::vector<double> out = local[v];
    for (std::size_t c : net.children(v)) {
      if (c == except) continue;
      const auto& msg = lambda_to_parent_[c][slot_of(net.parents(c), v)];
      for (std::size_t x = 0; x < out.size(); ++x) out[x] *= msg[x];
    }
    return out;
  };

  auto send_to_parent = [&](std::size_t v, std::size_t k) {
    const Node& node = net.node(v);
    const auto radices = net.parent_radices(v);
    const std::vector<double> lam = diagnostic(v, n);
    std::vector<double>& msg = lambda_to_parent_[v][k];
    std::fill(msg.begin(), msg.end(), 0.0);
    std::vector<std::size_t> cfg(radices.size(), 0);
    for (std::size_t row = 0; row < node.cpt.size(); ++row) {
      double weight = 1.0;
      for (std::size_t j = 0; j < cfg.size(); ++j) {
        if (j != k) weight *= pi_to_child_[v][j][cfg[j]];
      }
      if (weight != 0.0) {
        double inner = 0.0;
        for (std::size_t x = 0; x < lam.size(); ++x) inner += node.cpt[row][x] * lam[x];
        msg[cfg[k]] += weight * inner;
      }
      for (std::size_t j = cfg.size(); j-- > 0;) {
        if (++cfg[j] < radices[j]) break;
        cfg[j] = 0;
      }
    }
    normalize_message(msg);
  };

  auto send_to_child = [&](std::size_t v, std::size_t child) {
    std::vector<double> msg = causal(v);
    const std::vector<double> lam = diagnostic(v, child);
    for (std::size_t x = 0; x < msg.size(); ++x) msg[x] *= lam[x];
    normalize_message(msg);
    pi_to_child_[child][slot_of(net.parents(child), v)] = std::move(msg);
  };

  auto send = [&](std::size_t from, std::size_t to) {
    const auto parents = net.parents(from);
    const std::size_t k = slot_of(parents, to);
    if (k < parents.size()) {
      send_to_parent(from, k);
    } else {
      send_to_child(from, to);
    }
  };

  // Two passes per connected component of the skeleton: collect toward an
  // arbitrary pivot, then distribute away from it.
  std::vector<bool> seen(n, false);
  for (std::size_t pivot = 0; pivot < n; ++pivot) {
    if (seen[pivot]) continue;
    std::vector<std::size_t> preorder;
    std::vector<std::size_t> toward_pivot(n, n);
    std::vector<std::size_t> stack{pivot};
    seen[pivot] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      preorder.push_back(v);
      auto visit = [&](std::size_t w) {
        if (seen[w]) return;
        seen[w] = true;
        toward_pivot[w] = v;
        stack.push_back(w);
      };
      for (std::size_t p : net.parents(v)) visit(p);
      for (std::size_t c : net.children(v)) visit(c);
    }
    for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
      if (*it != pivot) send(*it, toward_pivot[*it]);
    }
    for (std::size_t v : preorder) {
      for (std::size_t p : net.parents(v)) {
        if (p != toward_pivot[v]) send(v, p);
      }
      for (std::size_t c : net.children(v)) {
        if (c != toward_pivot[v]) send(v, c);
      }
    }
  }

  for (std::size_t v = 0; v < n; ++v) {
    pi_[v] = causal(v);
    lambda_[v] = diagnostic(v, n);
    std::vector<double> bel(pi_[v].size());
    for (std::size_t x = 0; x < bel.size(); ++x) bel[x] = pi_[v][x] * lambda_[v][x];
    const double sum = std::accumulate(bel.begin(), bel.end(), 0.0);
    if (!(sum >= kNormalizerFloor)) {
      throw Error(ErrorCode::kZeroProbabilityEvidence, "evidence has zero probability", net.node(v).id);
    }
    for (double& b : bel) b /= sum;
    beliefs_[v] = std::move(bel);
  }
}

PosteriorMap enumerate_posteriors(const CompiledNetwork& network, std::span<const Evidence> ledger) {
  const std::size_t n = network.size();
  std::size_t total = 1;
  for (std::size_t v = 0; v < n; ++v) {
    total *= network.state_count(v);
    if (total > kMaxEnumeratedConfigurations) {
      throw Error(ErrorCode::kTooLarge, "joint space exceeds 2^20 configurations", network.network().id);
    }
  }

  std::vector<std::vector<double>> weight(n);
  for (std::size_t v = 0; v < n; ++v) weight[v].assign(network.state_count(v), 1.0);
  for (const Evidence& e : ledger) {
    const std::size_t v = network.require(e.node);
    const auto lk = finding_likelihood(network, e);
    for (std::size_t s = 0; s < lk.size(); ++s) weight[v][s] *= lk[s];
  }

  std::vector<std::vector<double>> marginal(n);
  for (std::size_t v = 0; v < n; ++v) marginal[v].assign(network.state_count(v), 0.0);

  std::vector<std::size_t> world(n, 0);
  std::vector<std::size_t> parent_states;
  double normalizer = 0.0;
  for (std::size_t config = 0; config < total; ++config) {
    double p = 1.0;
    for (std::size_t v = 0; v < n && p != 0.0; ++v) {
      parent_states.clear();
      for (std::size_t u : network.parents(v)) parent_states.push_back(world[u]);
      const std::size_t row = parent_config_index(network.parent_radices(v), parent_states);
      p *= network.node(v).cpt[row][world[v]] * weight[v][world[v]];
    }
    if (p != 0.0) {
      normalizer += p;
      for (std::size_t v = 0; v < n; ++v) marginal[v][world[v]] += p;
    }
    for (std::size_t v = n; v-- > 0;) {
      if (++world[v] < network.state_count(v)) break;
      world[v] = 0;
    }
  }
  if (!(normalizer >= kNormalizerFloor)) {
    throw Error(ErrorCode::kZeroNormalizer, "findings are jointly impossible", network.network().id);
  }

  PosteriorMap out;
  for (std::size_t v = 0; v < n; ++v) {
    for (double& m : marginal[v]) m /= normalizer;
    out.emplace(network.node(v).id, std::move(marginal[v]));
  }
  return out;
}

}  // namespace evr
