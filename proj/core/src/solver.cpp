#include "qqlearn/solver.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace qql {

ValueTable::ValueTable(int horizon, int num_states, StateId initial)
    : horizon_(horizon),
      num_states_(num_states),
      initial_(initial),
      values_(static_cast<std::size_t>(horizon + 1) * static_cast<std::size_t>(num_states), 0.0),
      greedy_(horizon, num_states) {}

namespace {

ValueTable backward_induction(const EpisodicModel& model, std::span<const double> end_rewards) {
  const int T = model.horizon();
  const int n_states = model.num_states();
  ValueTable table(T, n_states, model.initial());

  for (StateId s = 0; s < n_states; ++s) {
    const EndIndex g = model.end_index(s);
    if (g != 0) {
      const double r = end_rewards[static_cast<std::size_t>(g - 1)];
      for (int k = 0; k <= T; ++k) table.value(k, s) = r;
    }
  }
  for (int k = 1; k <= T; ++k) {
    const int t = T - k + 1;
    for (StateId s = 0; s < n_states; ++s) {
      if (model.is_end(s)) continue;
      double best = 0.0;
      ActionId best_action = Policy::kUndefined;
      for (ActionId a = 0; a < model.num_actions(s); ++a) {
        double q = 0.0;
        for (const auto& tr : model.transitions(s, a)) {
          q += tr.prob * table.value(k - 1, tr.next);
        }
        if (best_action == Policy::kUndefined || q > best) {
          best = q;
          best_action = a;
        }
      }
      table.value(k, s) = best;
      table.greedy().set(t, s, best_action);
    }
  }
  return table;
}

std::vector<double> shaped_end_rewards(const EpisodicModel& model, double theta, Objective objective) {
  std::vector<double> rewards(static_cast<std::size_t>(model.num_end_states()));
  for (EndIndex i = 1; i <= model.num_end_states(); ++i) {
    rewards[static_cast<std::size_t>(i - 1)] = shaped_reward(objective, theta, StateClass::terminal(i));
  }
  return rewards;
}

Envelope decumulative_envelope(const EpisodicModel& model) {
  const int n = model.num_end_states();
  Envelope envelope;
  envelope.values.resize(static_cast<std::size_t>(n));
  std::vector<double> rewards(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    for (EndIndex i = 1; i <= n; ++i) {
      rewards[static_cast<std::size_t>(i - 1)] = binary_upper_reward(k, StateClass::terminal(i));
    }
    envelope.values[static_cast<std::size_t>(k - 1)] = backward_induction(model, rewards).root_value();
  }
  return envelope;
}

}  // namespace

ValueTable solve_end_rewards(const EpisodicModel& model, std::span<const double> end_rewards) {
  require_valid(model);
  if (static_cast<int>(end_rewards.size()) != model.num_end_states()) {
    throw std::invalid_argument(fmt::format("expected {} end-state rewards, got {}", model.num_end_states(),
                                            end_rewards.size()));
  }
  return backward_induction(model, end_rewards);
}

ValueTable solve_theta(const EpisodicModel& model, double theta, Objective objective) {
  require_valid(model);
  return backward_induction(model, shaped_end_rewards(model, theta, objective));
}

Envelope optimal_decumulative(const EpisodicModel& model) {
  require_valid(model);
  return decumulative_envelope(model);
}

Envelope optimal_cumulative(const EpisodicModel& model) {
  require_valid(model);
  const Envelope g_star = decumulative_envelope(model);
  const int n = model.num_end_states();
  Envelope f_star;
  f_star.values.resize(static_cast<std::size_t>(n));
  for (EndIndex i = 1; i < n; ++i) {
    f_star.values[static_cast<std::size_t>(i - 1)] = 1.0 - g_star.at(i + 1);
  }
  f_star.values.back() = 1.0;
  return f_star;
}

EndIndex optimal_upper_quantile(const EpisodicModel& model, Tau tau) {
  return upper_quantile_of_decumulative(optimal_decumulative(model).values, tau, kComputedSlack);
}

EndIndex optimal_lower_quantile(const EpisodicModel& model, Tau tau) {
  return lower_quantile_of_cumulative(optimal_cumulative(model).values, tau, kComputedSlack);
}

double ThetaSearch::trailing_mean(double fraction) const {
  const std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(theta.size())));
  double acc = 0.0;
  for (std::size_t k = theta.size() - count; k < theta.size(); ++k) acc += theta[k];
  return acc / static_cast<double>(count);
}

ThetaSearch simple_strategy(const EpisodicModel& model, Tau tau, std::size_t iterations, double theta0,
                            Objective objective) {
  require_valid(model);
  if (tau.value() <= 0.0 || tau.value() >= 1.0) {
    throw std::invalid_argument("threshold search requires tau in (0, 1)");
  }
  // With theta = 0 every end state pays 1 (upper) or 0 (lower), so the
  // search always has a side where theta must grow.
  const double target = objective == Objective::kUpper ? 1.0 - tau.value() : -tau.value();
  const auto below_target = [&](double v) {
    return objective == Objective::kUpper ? v < target : v <= target;
  };
  if (below_target(backward_induction(model, shaped_end_rewards(model, 0.0, objective)).root_value())) {
    throw std::logic_error("root value at theta = 0 is below the target level");
  }

  Theta theta(theta0, model.num_end_states());
  ThetaSearch search;
  search.theta.reserve(iterations + 1);
  search.root_value.reserve(iterations);
  search.theta.push_back(theta.value());
  for (std::size_t n = 1; n <= iterations; ++n) {
    const double v = backward_induction(model, shaped_end_rewards(model, theta.value(), objective)).root_value();
    search.root_value.push_back(v);
    const double step = 1.0 / static_cast<double>(n);
    if (theta.shift(below_target(v) ? -step : step)) ++search.clamp_events;
    search.theta.push_back(theta.value());
  }
  return search;
}

double threshold_crossing(const EpisodicModel& model, Tau tau, Objective objective) {
  require_valid(model);
  if (tau.value() <= 0.0 || tau.value() >= 1.0) {
    throw std::invalid_argument("threshold search requires tau in (0, 1)");
  }
  const double target = objective == Objective::kUpper ? 1.0 - tau.value() : -tau.value();
  const auto increases = [&](double theta) {
    const double v = backward_induction(model, shaped_end_rewards(model, theta, objective)).root_value();
    return objective == Objective::kUpper ? v >= target : v > target;
  };
  double lo = 0.0;
  double hi = static_cast<double>(model.num_end_states() + 1);
  if (increases(hi)) return hi;
  for (int k = 0; k < 64; ++k) {
    const double mid = 0.5 * (lo + hi);
    (increases(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace qql
