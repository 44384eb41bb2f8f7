#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qqlearn/model.hpp"
#include "qqlearn/quantile.hpp"
#include "qqlearn/reward.hpp"

namespace qql {

/// Optimal finite-horizon values with end-state rewards collected on
/// absorption and no discounting.
///
/// value(k, s) is the optimal expected reward from s with k decisions left;
/// value(0, .) is the end-state reward (0 on non-end states). The greedy
/// policy is indexed by decision step t = T - k + 1, ties resolved towards
/// the lowest action index.
class ValueTable {
 public:
  ValueTable(int horizon, int num_states, StateId initial);

  double value(int remaining, StateId s) const { return values_[index(remaining, s)]; }
  double& value(int remaining, StateId s) { return values_[index(remaining, s)]; }
  double root_value() const { return value(horizon_, initial_); }

  int horizon() const { return horizon_; }
  const Policy& greedy() const { return greedy_; }
  Policy& greedy() { return greedy_; }

 private:
  std::size_t index(int remaining, StateId s) const {
    return static_cast<std::size_t>(remaining) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(s);
  }

  int horizon_;
  int num_states_;
  StateId initial_;
  std::vector<double> values_;
  Policy greedy_;
};

/// Backward induction for arbitrary end-state rewards (entry i-1 pays g_i).
ValueTable solve_end_rewards(const EpisodicModel& model, std::span<const double> end_rewards);

/// Backward induction with the smoothed shaped reward at threshold `theta`.
ValueTable solve_theta(const EpisodicModel& model, double theta, Objective objective);

/// Per-end-state optimal probabilities; at(i) is the value for g_i.
struct Envelope {
  std::vector<double> values;

  double at(EndIndex i) const { return values.at(static_cast<std::size_t>(i - 1)); }
  int size() const { return static_cast<int>(values.size()); }
};

/// G*(g_k) = max over policies of G(g_k), one binary-reward solve per k.
Envelope optimal_decumulative(const EpisodicModel& model);
/// F*(g_i) = min over policies of F(g_i) = 1 - G*(g_{i+1}); F*(g_n) = 1.
Envelope optimal_cumulative(const EpisodicModel& model);

EndIndex optimal_upper_quantile(const EpisodicModel& model, Tau tau);
EndIndex optimal_lower_quantile(const EpisodicModel& model, Tau tau);

struct ThetaSearch {
  std::vector<double> theta;       // theta_0 .. theta_N
  std::vector<double> root_value;  // V*_theta(s_0) evaluated at theta_0 .. theta_{N-1}
  std::size_t clamp_events = 0;

  double final_theta() const { return theta.back(); }
  /// Mean of the last `fraction` of the iterates.
  double trailing_mean(double fraction) const;
};

/// Threshold search with a full re-solve per iteration and step 1/n:
/// upper objective decreases theta iff V*_theta(s_0) < 1 - tau, lower
/// objective iff V*_theta(s_0) <= -tau. Requires tau in (0, 1).
ThetaSearch simple_strategy(const EpisodicModel& model, Tau tau, std::size_t iterations, double theta0,
                            Objective objective = Objective::kUpper);

/// Equilibrium of the threshold search located by bisection on the
/// non-increasing map theta -> V*_theta(s_0): the supremum of thresholds
/// where theta would still increase. Requires tau in (0, 1).
double threshold_crossing(const EpisodicModel& model, Tau tau, Objective objective = Objective::kUpper);

}  // namespace qql
