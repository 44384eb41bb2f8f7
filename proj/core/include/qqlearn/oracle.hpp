#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qqlearn/model.hpp"
#include "qqlearn/quantile.hpp"
#include "qqlearn/reward.hpp"

namespace qql {

enum class PolicySpace {
  /// Only (t, s) pairs where s is reachable at step t under some policy.
  kReachable,
  /// Every (t, s) pair with s a non-end state: |A|^(|S| T) policies.
  kFull,
};

inline constexpr std::uint64_t kEnumerationGuard = 10'000'000;

/// Enumerates deterministic time-indexed policies in lexicographic order of
/// their decision points (ordered by step, then state). Rules at points
/// outside the enumerated space stay undefined.
class PolicyEnumerator {
 public:
  /// Throws std::length_error with the size estimate when the policy count
  /// exceeds `guard`.
  explicit PolicyEnumerator(const EpisodicModel& model, PolicySpace space = PolicySpace::kReachable,
                            std::uint64_t guard = kEnumerationGuard);

  std::uint64_t count() const { return count_; }
  const Policy& current() const { return policy_; }
  /// Advances to the next policy; false once every policy has been visited.
  bool next();

 private:
  struct Point {
    int t;
    StateId s;
    int num_actions;
  };
  std::vector<Point> points_;
  std::vector<int> digits_;
  Policy policy_;
  std::uint64_t count_ = 1;
  bool started_ = false;
  bool done_ = false;
};

/// Exact policy count of the space, saturating at UINT64_MAX.
std::uint64_t count_policies(const EpisodicModel& model, PolicySpace space = PolicySpace::kReachable);

struct BestQuantile {
  Policy policy;
  EndIndex quantile = 0;
};

/// Exhaustive search for a policy maximizing the lower/upper tau-quantile of
/// its end distribution. Returns the lexicographically first maximizer.
BestQuantile brute_force_best_quantile(const EpisodicModel& model, Tau tau, Objective objective);

/// One enumeration pass answering several (tau, objective) queries; entry
/// j*taus.size()+k of the result answers objectives[j], taus[k].
std::vector<BestQuantile> brute_force_best_quantiles(const EpisodicModel& model, std::span<const double> taus,
                                                     std::span<const Objective> objectives);

struct OracleMismatch {
  double tau;
  Objective objective;
  EndIndex brute_force;
  EndIndex envelope;
};

struct OracleReport {
  std::size_t cases = 0;
  std::size_t agreements = 0;
  std::vector<OracleMismatch> mismatches;

  bool all_agree() const { return agreements == cases; }
};

/// Compares the brute-force optimum with the envelope-based optimal
/// quantiles for both objectives at every tau.
OracleReport check_envelope_equivalence(const EpisodicModel& model, std::span<const double> taus);

}  // namespace qql
