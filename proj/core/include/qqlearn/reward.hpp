#pragma once

#include "qqlearn/model.hpp"

namespace qql {

enum class Objective { kUpper, kLower };

const char* to_string(Objective objective);
/// Parses "upper" or "lower"; throws std::invalid_argument otherwise.
Objective parse_objective(const std::string& text);

/// Whether a state is an end state, and if so which one. Reward shaping only
/// looks at this classification, never at raw states.
struct StateClass {
  EndIndex end = 0;

  static constexpr StateClass non_end() { return {}; }
  static constexpr StateClass terminal(EndIndex i) { return {i}; }
  constexpr bool is_end() const { return end != 0; }
};

/// Quantile threshold of the shaped rewards, kept inside [0, n + 1]. Both
/// shaped rewards are constant outside that interval.
class Theta {
 public:
  Theta(double value, int num_end_states);

  double value() const { return value_; }
  double upper_bound() const { return static_cast<double>(num_end_states_ + 1); }

  /// Adds `delta` and clamps. Returns true when the clamp changed the result.
  bool shift(double delta);

 private:
  double value_;
  int num_end_states_;
};

/// Smoothed upper-quantile reward: 1 if theta <= i, 0 if theta >= i+1,
/// i+1-theta in between; 0 on non-end states.
double upper_reward(double theta, StateClass s);
/// Smoothed lower-quantile reward: 0 if theta <= i, -1 if theta >= i+1,
/// i-theta in between; 0 on non-end states.
double lower_reward(double theta, StateClass s);
double shaped_reward(Objective objective, double theta, StateClass s);

/// 1 on end states g_i with i >= k, else 0.
double binary_upper_reward(int k, StateClass s);
/// -1 on end states g_i with i < k, else 0 (the {0, 1} threshold table shifted
/// down by one so it coincides with lower_reward at theta = k).
double binary_lower_reward(int k, StateClass s);

/// Reported quantile index of a converged threshold: floor(theta) clamped to
/// [1, n].
EndIndex quantile_from_theta(double theta, int num_end_states);

}  // namespace qql
