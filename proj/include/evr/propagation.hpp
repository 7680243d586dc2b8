#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evr/network.hpp"

namespace evr {

/// A finding on one node. HARD fixes the node to `state`; VIRTUAL multiplies
/// the node's diagnostic support by `likelihood` (a noisy report, or a
/// summarized assessment reported straight into an intermediate node).
struct Evidence {
  enum class Kind { kHard, kVirtual };

  Kind kind = Kind::kHard;
  std::string node;
  std::size_t state = 0;
  std::vector<double> likelihood;

  static Evidence hard(std::string node, std::size_t state);
  static Evidence virtual_finding(std::string node, std::vector<double> likelihood);

  bool is_hard() const { return kind == Kind::kHard; }
  bool operator==(const Evidence&) const = default;
};

/// Per-state likelihood the finding contributes (indicator for HARD).
/// Throws ERR_NO_SUCH_NODE / ERR_INVALID_EVIDENCE.
std::vector<double> finding_likelihood(const CompiledNetwork& network, const Evidence& finding);

using PosteriorMap = std::map<std::string, std::vector<double>>;

inline constexpr double kNormalizerFloor = 1e-300;

/// Exact posteriors on a singly connected network, maintained by two-pass
/// causal (pi) / diagnostic (lambda) message passing. A value type: the
/// mutating operations return a new state and leave `*this` untouched.
/// Beliefs depend only on the set of findings, never on their order.
class BeliefState {
 public:
  /// Prior marginals, empty ledger. Throws ERR_NOT_SINGLY_CONNECTED for loopy
  /// networks.
  static BeliefState initialize(CompiledNetwork network);

  /// Throws ERR_DUPLICATE_EVIDENCE if the node already carries a finding and
  /// ERR_ZERO_PROBABILITY_EVIDENCE if the ledger becomes impossible.
  BeliefState assert_evidence(const Evidence& finding) const;
  /// All-or-nothing batch; the error subject names the offending finding.
  BeliefState assert_all(std::span<const Evidence> findings) const;
  /// Recomputes from the remaining ledger. Throws ERR_NO_SUCH_EVIDENCE.
  BeliefState retract_evidence(std::string_view node) const;

  std::span<const double> beliefs(std::string_view node) const;
  std::span<const double> beliefs(std::size_t node) const { return beliefs_[node]; }
  PosteriorMap all_beliefs() const;

  const CompiledNetwork& network() const { return network_; }
  const std::vector<Evidence>& ledger() const { return ledger_; }
  const Evidence* evidence_on(std::string_view node) const;
  bool observed(std::string_view node) const { return evidence_on(node) != nullptr; }
  bool hard_observed(std::size_t node) const;

  /// Causal support pi(x) and diagnostic support lambda(x), unnormalized up
  /// to a positive factor.
  std::span<const double> causal_support(std::size_t node) const { return pi_[node]; }
  std::span<const double> diagnostic_support(std::size_t node) const { return lambda_[node]; }

 private:
  explicit BeliefState(CompiledNetwork network);
  void propagate();

  CompiledNetwork network_;
  std::vector<Evidence> ledger_;
  std::vector<std::vector<double>> beliefs_;
  std::vector<std::vector<double>> pi_;
  std::vector<std::vector<double>> lambda_;
  // Messages on each link, indexed [child][parent slot], over parent states.
  std::vector<std::vector<std::vector<double>>> pi_to_child_;
  std::vector<std::vector<std::vector<double>>> lambda_to_parent_;
};

inline constexpr std::size_t kMaxEnumeratedConfigurations = std::size_t{1} << 20;

/// Brute-force oracle: multiplies CPT entries over every joint configuration,
/// weights by the findings, renormalizes and marginalizes. Accepts any DAG.
/// Throws ERR_TOO_LARGE above 2^20 configurations and ERR_ZERO_NORMALIZER
/// for contradictory findings.
PosteriorMap enumerate_posteriors(const CompiledNetwork& network, std::span<const Evidence> ledger);

/// Shannon entropy in bits.
double entropy_bits(std::span<const double> distribution);

}  // namespace evr
