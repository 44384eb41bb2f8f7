#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qqlearn/model.hpp"
#include "qqlearn/quantile.hpp"
#include "qqlearn/random.hpp"
#include "qqlearn/reward.hpp"

namespace qql {

enum class Layering {
  /// Single layer when the environment encodes progress in its states,
  /// one layer per decision step otherwise.
  kAutomatic,
  kTimeIndexed,
  kSingle,
};

/// Action values Q(t, s, a), zero-initialized. Layer t = 1 is the root
/// decision step; a single-layer table serves every t.
class QTable {
 public:
  QTable(const Simulator& env, Layering layering = Layering::kAutomatic);

  int layers() const { return layers_; }
  int num_states() const { return static_cast<int>(num_actions_.size()); }
  int num_actions(StateId s) const { return num_actions_[static_cast<std::size_t>(s)]; }

  double& at(int t, StateId s, ActionId a) { return values_[offset(t, s) + static_cast<std::size_t>(a)]; }
  double at(int t, StateId s, ActionId a) const { return values_[offset(t, s) + static_cast<std::size_t>(a)]; }
  std::span<const double> row(int t, StateId s) const {
    return {values_.data() + offset(t, s), static_cast<std::size_t>(num_actions(s))};
  }
  /// Updates applied so far to the (t, s, a) entry.
  std::uint64_t& visits(int t, StateId s, ActionId a) { return visits_[offset(t, s) + static_cast<std::size_t>(a)]; }
  std::uint64_t visits(int t, StateId s, ActionId a) const {
    return visits_[offset(t, s) + static_cast<std::size_t>(a)];
  }

  /// max_a Q(t, s, a); 0 for states without actions (end states).
  double max_value(int t, StateId s) const;

  std::span<const double> values() const { return values_; }

 private:
  std::size_t offset(int t, StateId s) const {
    const int layer = layers_ == 1 ? 0 : t - 1;
    return (static_cast<std::size_t>(layer) * num_actions_.size() + static_cast<std::size_t>(s)) * stride_;
  }

  int layers_;
  std::size_t stride_;
  std::vector<int> num_actions_;
  std::vector<double> values_;
  std::vector<std::uint64_t> visits_;
};

/// Step-size and exploration schedules indexed by the global step n >= 1.
struct Schedules {
  std::function<double(std::uint64_t)> alpha;
  std::function<double(std::uint64_t)> beta;
  std::function<double(std::uint64_t)> epsilon;

  /// alpha_n = 1/(n+1)^alpha_exponent, beta_n = 1/n, constant epsilon.
  static Schedules standard(double alpha_exponent = 0.55, double epsilon = 0.01);
  /// Same as standard() with epsilon_n = max(epsilon_floor, n^(-1/4)).
  static Schedules decaying_exploration(double alpha_exponent = 0.55, double epsilon_floor = 0.01);
};

struct TimescaleCheck {
  bool pass = false;
  std::vector<double> ratios;  // beta_n / alpha_n at n = 1e2, 1e4, 1e6
  std::string diagnostic;
};

/// Numerical check that beta_n / alpha_n -> 0: the ratios at n = 1e2, 1e4,
/// 1e6 must be non-increasing with the last one below 0.05.
TimescaleCheck check_timescale(const Schedules& schedules);

/// Greedy action (lowest index among ties) with probability 1 - eps, uniform
/// action otherwise. Draws nothing from `rng` when eps == 0.
ActionId epsilon_greedy(std::span<const double> q_row, double eps, Rng& rng);

/// Q(t,s,a) += alpha (r + max_a' Q(t+1, s', a') - Q(t,s,a)); the bootstrap
/// term is dropped when s' is terminal.
void q_update(QTable& q, int t, StateId s, ActionId a, double reward, StateId next, bool terminal, double alpha);

/// Learned root value max_a Q(1, s0, a).
double v_estimate(const QTable& q, StateId s0);

/// Running frequencies of attained end states and their value under the
/// current shaped reward.
class ScoreTracker {
 public:
  explicit ScoreTracker(int num_end_states) : counts_(static_cast<std::size_t>(num_end_states), 0) {}

  void record(EndIndex terminal) { ++counts_.at(static_cast<std::size_t>(terminal - 1)); ++total_; }
  std::uint64_t episodes() const { return total_; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::vector<double> frequencies() const;
  /// sum_i f_i R_theta(g_i); 0 before the first episode ends.
  double score(Objective objective, double theta) const;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct TraceRecord {
  std::uint64_t n = 0;
  double theta = 0.0;
  double v_estimate = 0.0;
  double score = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t episode_count = 0;
};

/// What n is in the Q-learning rate alpha_n.
enum class RateIndex {
  /// Number of updates applied so far to the (t, s, a) entry, plus one.
  kVisits,
  /// Global step counter, shared with beta_n and epsilon_n.
  kGlobalStep,
};

struct LearningOptions {
  Objective objective = Objective::kUpper;
  std::uint64_t steps = 1'000'000;
  /// Trace record every `log_every` steps; 0 disables the trace.
  std::uint64_t log_every = 1000;
  double theta0 = 1.0;
  /// Steps during which theta is held fixed.
  std::uint64_t theta_warmup = 0;
  Layering layering = Layering::kAutomatic;
  RateIndex alpha_index = RateIndex::kVisits;
};

struct LearningResult {
  explicit LearningResult(QTable table) : q(std::move(table)) {}

  QTable q;
  double theta = 0.0;
  std::vector<TraceRecord> trace;
  /// Mean of v_estimate over the last 10% of the steps.
  double trailing_v_mean = 0.0;
  double final_v = 0.0;
  double final_score = 0.0;
  std::uint64_t episodes = 0;
  std::uint64_t clamp_events = 0;
  std::vector<double> end_frequencies;
};

/// Shaped reward with a frozen threshold.
struct FixedReward {
  Objective objective = Objective::kUpper;
  double theta = 1.0;

  double operator()(StateClass s) const { return shaped_reward(objective, theta, s); }
};

/// Tabular finite-horizon Q-learning against a fixed shaped reward. Uses
/// options.steps, options.log_every and options.layering; theta in the trace
/// is reward.theta and beta is reported as 0.
LearningResult q_learning(const Simulator& env, const FixedReward& reward, const Schedules& schedules,
                          const LearningOptions& options, Rng& rng);

/// Two-timescale QQ-learning: Q-learning on the shaped reward interleaved
/// with the slow threshold update theta <- theta -/+ beta_n.
/// Throws std::invalid_argument when tau is outside (0, 1) or the
/// schedules fail check_timescale.
LearningResult qq_learning(const Simulator& env, Tau tau, const Schedules& schedules,
                           const LearningOptions& options, Rng& rng);

/// Greedy policy of a learned table (lowest-index tie-break).
Policy greedy_policy(const QTable& q, int horizon);

}  // namespace qql
