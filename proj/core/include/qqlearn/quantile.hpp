#pragma once

#include <span>
#include <vector>

#include "qqlearn/model.hpp"

namespace qql {

/// Quantile level in [0, 1].
class Tau {
 public:
  /// Throws std::invalid_argument outside [0, 1].
  explicit Tau(double value);
  double value() const { return value_; }

 private:
  double value_;
};

/// Slack applied to probability thresholds when the distribution was
/// computed (propagated or enumerated) rather than given exactly.
inline constexpr double kComputedSlack = 1e-9;

/// F(g_i): probability of ending at g_i or a less preferred end state.
double cumulative(const EndStateDistribution& dist, EndIndex i);
/// G(g_i): probability of ending at g_i or a more preferred end state.
double decumulative(const EndStateDistribution& dist, EndIndex i);

/// min{i : F(g_i) >= tau}. Requires tau in (0, 1].
EndIndex lower_quantile(const EndStateDistribution& dist, Tau tau, double slack = 0.0);
/// max{i : G(g_i) >= 1 - tau}. Requires tau in [0, 1).
EndIndex upper_quantile(const EndStateDistribution& dist, Tau tau, double slack = 0.0);

// Same thresholds on a precomputed cumulative (resp. decumulative) vector.
// Entry k-1 holds the value at g_k. The sets are never empty since
// F(g_n) = G(g_1) = 1.
EndIndex lower_quantile_of_cumulative(std::span<const double> cumulative, Tau tau, double slack = 0.0);
EndIndex upper_quantile_of_decumulative(std::span<const double> decumulative, Tau tau, double slack = 0.0);

/// The tau-quantile. At tau = 0 only the upper quantile exists and at tau = 1
/// only the lower one; both fields then hold that value. Inside (0, 1) the
/// two may disagree, in which case the result is split.
struct QuantileValue {
  EndIndex lower = 0;
  EndIndex upper = 0;

  bool split() const { return lower != upper; }
  bool operator==(const QuantileValue&) const = default;
};

QuantileValue quantile(const EndStateDistribution& dist, Tau tau, double slack = 0.0);

/// Frequencies of the observed terminal indices (each in 1..n).
EndStateDistribution empirical_distribution(std::span<const EndIndex> terminals, int n);

/// Total-variation distance between two distributions of equal size.
double total_variation(const EndStateDistribution& a, const EndStateDistribution& b);

}  // namespace qql
