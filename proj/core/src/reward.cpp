#include "qqlearn/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qql {

const char* to_string(Objective objective) { return objective == Objective::kUpper ? "upper" : "lower"; }

Objective parse_objective(const std::string& text) {
  if (text == "upper") return Objective::kUpper;
  if (text == "lower") return Objective::kLower;
  throw std::invalid_argument(fmt::format("objective must be 'upper' or 'lower', got '{}'", text));
}

Theta::Theta(double value, int num_end_states) : value_(value), num_end_states_(num_end_states) {
  if (num_end_states < 1) {
    throw std::invalid_argument("theta needs at least one end state");
  }
  if (!std::isfinite(value)) {
    throw std::invalid_argument("theta must be finite");
  }
  value_ = std::clamp(value_, 0.0, upper_bound());
}

bool Theta::shift(double delta) {
  const double raw = value_ + delta;
  value_ = std::clamp(raw, 0.0, upper_bound());
  return value_ != raw;
}

double upper_reward(double theta, StateClass s) {
  if (!s.is_end()) return 0.0;
  const auto i = static_cast<double>(s.end);
  if (theta <= i) return 1.0;
  if (theta >= i + 1.0) return 0.0;
  return i + 1.0 - theta;
}

double lower_reward(double theta, StateClass s) {
  if (!s.is_end()) return 0.0;
  const auto i = static_cast<double>(s.end);
  if (theta >= i + 1.0) return -1.0;
  if (theta <= i) return 0.0;
  return i - theta;
}

double shaped_reward(Objective objective, double theta, StateClass s) {
  return objective == Objective::kUpper ? upper_reward(theta, s) : lower_reward(theta, s);
}

double binary_upper_reward(int k, StateClass s) { return s.is_end() && s.end >= k ? 1.0 : 0.0; }

double binary_lower_reward(int k, StateClass s) { return s.is_end() && s.end < k ? -1.0 : 0.0; }

EndIndex quantile_from_theta(double theta, int num_end_states) {
  const double f = std::floor(theta);
  if (f < 1.0) return 1;
  if (f > static_cast<double>(num_end_states)) return num_end_states;
  return static_cast<EndIndex>(f);
}

}  // namespace qql
