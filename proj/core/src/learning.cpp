#include "qqlearn/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace qql {

QTable::QTable(const Simulator& env, Layering layering) {
  if (layering == Layering::kAutomatic) {
    layering = env.progress_encoded() ? Layering::kSingle : Layering::kTimeIndexed;
  }
  layers_ = layering == Layering::kSingle ? 1 : env.horizon();
  stride_ = static_cast<std::size_t>(std::max(env.max_actions(), 1));
  num_actions_.resize(static_cast<std::size_t>(env.num_states()));
  for (StateId s = 0; s < env.num_states(); ++s) {
    num_actions_[static_cast<std::size_t>(s)] = env.num_actions(s);
  }
  values_.assign(static_cast<std::size_t>(layers_) * num_actions_.size() * stride_, 0.0);
  visits_.assign(values_.size(), 0);
}

double QTable::max_value(int t, StateId s) const {
  const auto r = row(t, s);
  if (r.empty()) return 0.0;
  return *std::max_element(r.begin(), r.end());
}

namespace {

double polynomial_rate(std::uint64_t n, double exponent) {
  return 1.0 / std::pow(static_cast<double>(n) + 1.0, exponent);
}

}  // namespace

Schedules Schedules::standard(double alpha_exponent, double epsilon) {
  return Schedules{
      [alpha_exponent](std::uint64_t n) { return polynomial_rate(n, alpha_exponent); },
      [](std::uint64_t n) { return 1.0 / static_cast<double>(n); },
      [epsilon](std::uint64_t) { return epsilon; },
  };
}

Schedules Schedules::decaying_exploration(double alpha_exponent, double epsilon_floor) {
  Schedules s = standard(alpha_exponent, epsilon_floor);
  s.epsilon = [epsilon_floor](std::uint64_t n) {
    return std::max(epsilon_floor, std::pow(static_cast<double>(n), -0.25));
  };
  return s;
}

TimescaleCheck check_timescale(const Schedules& schedules) {
  TimescaleCheck check;
  for (std::uint64_t n : {100ULL, 10'000ULL, 1'000'000ULL}) {
    const double alpha = schedules.alpha(n);
    const double beta = schedules.beta(n);
    if (!(alpha > 0.0)) {
      check.diagnostic = fmt::format("alpha_n must be positive, got {} at n={}", alpha, n);
      return check;
    }
    check.ratios.push_back(beta / alpha);
  }
  const auto& r = check.ratios;
  if (!(r[1] <= r[0] && r[2] <= r[1])) {
    check.diagnostic = fmt::format("beta_n/alpha_n is not decreasing: {:.6g}, {:.6g}, {:.6g} at n=1e2, 1e4, 1e6",
                                   r[0], r[1], r[2]);
    return check;
  }
  if (!(r[2] < 0.05)) {
    check.diagnostic = fmt::format("beta_n/alpha_n = {:.6g} at n=1e6; theta would not be quasi-static (need < 0.05)",
                                   r[2]);
    return check;
  }
  check.pass = true;
  check.diagnostic = fmt::format("beta_n/alpha_n = {:.6g}, {:.6g}, {:.6g} at n=1e2, 1e4, 1e6", r[0], r[1], r[2]);
  return check;
}

ActionId epsilon_greedy(std::span<const double> q_row, double eps, Rng& rng) {
  if (q_row.empty()) {
    throw std::invalid_argument("epsilon_greedy on a state without actions");
  }
  if (eps > 0.0 && rng.uniform() < eps) {
    return static_cast<ActionId>(rng.below(q_row.size()));
  }
  return static_cast<ActionId>(std::max_element(q_row.begin(), q_row.end()) - q_row.begin());
}

void q_update(QTable& q, int t, StateId s, ActionId a, double reward, StateId next, bool terminal, double alpha) {
  double target = reward;
  if (!terminal) {
    if (q.layers() > 1 && t >= q.layers()) {
      throw std::logic_error(fmt::format("non-terminal transition at the last decision step {}", t));
    }
    target += q.max_value(t + 1, next);
  }
  double& entry = q.at(t, s, a);
  entry += alpha * (target - entry);
}

double v_estimate(const QTable& q, StateId s0) { return q.max_value(1, s0); }

std::vector<double> ScoreTracker::frequencies() const {
  std::vector<double> f(counts_.size(), 0.0);
  if (total_ == 0) return f;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    f[k] = static_cast<double>(counts_[k]) / static_cast<double>(total_);
  }
  return f;
}

double ScoreTracker::score(Objective objective, double theta) const {
  if (total_ == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (counts_[k] == 0) continue;
    acc += static_cast<double>(counts_[k]) *
           shaped_reward(objective, theta, StateClass::terminal(static_cast<EndIndex>(k + 1)));
  }
  return acc / static_cast<double>(total_);
}

namespace {

double learning_rate(const Schedules& schedules, const LearningOptions& options, QTable& q, std::uint64_t n, int t,
                     StateId s, ActionId a) {
  if (options.alpha_index == RateIndex::kVisits) return schedules.alpha(++q.visits(t, s, a));
  ++q.visits(t, s, a);
  return schedules.alpha(n);
}

std::uint64_t tail_begin(std::uint64_t steps) {
  const std::uint64_t tail = std::max<std::uint64_t>(1, steps / 10);
  return steps - tail;
}

void finish(LearningResult& result, const ScoreTracker& tracker, Objective objective, double tail_sum,
            std::uint64_t steps, StateId s0) {
  result.trailing_v_mean = tail_sum / static_cast<double>(steps - tail_begin(steps));
  result.final_v = v_estimate(result.q, s0);
  result.final_score = tracker.score(objective, result.theta);
  result.episodes = tracker.episodes();
  result.end_frequencies = tracker.frequencies();
}

}  // namespace

LearningResult q_learning(const Simulator& env, const FixedReward& reward, const Schedules& schedules,
                          const LearningOptions& options, Rng& rng) {
  if (options.steps == 0) throw std::invalid_argument("q_learning needs at least one step");
  LearningResult result(QTable(env, options.layering));
  result.theta = reward.theta;
  ScoreTracker tracker(env.num_end_states());
  const StateId s0 = env.initial();
  const std::uint64_t tail_from = tail_begin(options.steps);
  double tail_sum = 0.0;

  StateId s = s0;
  int t = 1;
  for (std::uint64_t n = 1; n <= options.steps; ++n) {
    const double eps = schedules.epsilon(n);
    const ActionId a = epsilon_greedy(result.q.row(t, s), eps, rng);
    const double alpha = learning_rate(schedules, options, result.q, n, t, s, a);
    const StateId next = env.step(s, a, rng);
    const EndIndex g = env.end_index(next);
    const bool terminal = g != 0;
    const double r = terminal ? reward(StateClass::terminal(g)) : 0.0;
    q_update(result.q, t, s, a, r, next, terminal, alpha);
    const double v = v_estimate(result.q, s0);

    if (terminal) {
      tracker.record(g);
      s = s0;
      t = 1;
    } else {
      s = next;
      ++t;
    }
    if (n > tail_from) tail_sum += v;
    if (options.log_every != 0 && n % options.log_every == 0) {
      result.trace.push_back(
          {n, reward.theta, v, tracker.score(reward.objective, reward.theta), eps, alpha, 0.0, tracker.episodes()});
    }
  }
  finish(result, tracker, reward.objective, tail_sum, options.steps, s0);
  return result;
}

LearningResult qq_learning(const Simulator& env, Tau tau, const Schedules& schedules, const LearningOptions& options,
                           Rng& rng) {
  if (tau.value() <= 0.0 || tau.value() >= 1.0) {
    throw std::invalid_argument(fmt::format("QQ-learning requires tau in (0, 1), got {}", tau.value()));
  }
  if (options.steps == 0) throw std::invalid_argument("qq_learning needs at least one step");
  if (const auto check = check_timescale(schedules); !check.pass) {
    throw std::invalid_argument("timescale check failed: " + check.diagnostic);
  }

  const Objective objective = options.objective;
  const double target = objective == Objective::kUpper ? 1.0 - tau.value() : -tau.value();

  LearningResult result(QTable(env, options.layering));
  Theta theta(options.theta0, env.num_end_states());
  ScoreTracker tracker(env.num_end_states());
  const StateId s0 = env.initial();
  const std::uint64_t tail_from = tail_begin(options.steps);
  double tail_sum = 0.0;

  StateId s = s0;
  int t = 1;
  for (std::uint64_t n = 1; n <= options.steps; ++n) {
    const double eps = schedules.epsilon(n);
    const double beta = schedules.beta(n);
    const ActionId a = epsilon_greedy(result.q.row(t, s), eps, rng);
    const double alpha = learning_rate(schedules, options, result.q, n, t, s, a);
    const StateId next = env.step(s, a, rng);
    const EndIndex g = env.end_index(next);
    const bool terminal = g != 0;
    // Reward is labelled with the threshold in force at absorption.
    const double r = terminal ? shaped_reward(objective, theta.value(), StateClass::terminal(g)) : 0.0;
    q_update(result.q, t, s, a, r, next, terminal, alpha);

    const double v = v_estimate(result.q, s0);
    if (n > options.theta_warmup) {
      const bool decrease = objective == Objective::kUpper ? v < target : v <= target;
      if (theta.shift(decrease ? -beta : beta)) ++result.clamp_events;
    }

    if (terminal) {
      tracker.record(g);
      s = s0;
      t = 1;
    } else {
      s = next;
      ++t;
    }
    if (n > tail_from) tail_sum += v;
    if (options.log_every != 0 && n % options.log_every == 0) {
      result.trace.push_back(
          {n, theta.value(), v, tracker.score(objective, theta.value()), eps, alpha, beta, tracker.episodes()});
    }
  }
  result.theta = theta.value();
  finish(result, tracker, objective, tail_sum, options.steps, s0);
  return result;
}

Policy greedy_policy(const QTable& q, int horizon) {
  Policy policy(horizon, q.num_states());
  for (int t = 1; t <= horizon; ++t) {
    for (StateId s = 0; s < q.num_states(); ++s) {
      const auto r = q.row(t, s);
      if (r.empty()) continue;
      policy.set(t, s, static_cast<ActionId>(std::max_element(r.begin(), r.end()) - r.begin()));
    }
  }
  return policy;
}

}  // namespace qql
