#include "qqlearn/quantile.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qql {

Tau::Tau(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument(fmt::format("tau must lie in [0, 1], got {}", value));
  }
}

namespace {

void check_index(const EndStateDistribution& dist, EndIndex i) {
  if (i < 1 || i > dist.size()) {
    throw std::out_of_range(fmt::format("end index {} outside 1..{}", i, dist.size()));
  }
}

std::vector<double> prefix_sums(std::span<const double> p) {
  std::vector<double> out(p.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    out[k] = acc;
  }
  return out;
}

std::vector<double> suffix_sums(std::span<const double> p) {
  std::vector<double> out(p.size());
  double acc = 0.0;
  for (std::size_t k = p.size(); k-- > 0;) {
    acc += p[k];
    out[k] = acc;
  }
  return out;
}

}  // namespace

double cumulative(const EndStateDistribution& dist, EndIndex i) {
  check_index(dist, i);
  double acc = 0.0;
  for (EndIndex j = 1; j <= i; ++j) acc += dist.prob(j);
  return acc;
}

double decumulative(const EndStateDistribution& dist, EndIndex i) {
  check_index(dist, i);
  double acc = 0.0;
  for (EndIndex j = dist.size(); j >= i; --j) acc += dist.prob(j);
  return acc;
}

EndIndex lower_quantile_of_cumulative(std::span<const double> cumulative, Tau tau, double slack) {
  if (tau.value() <= 0.0) {
    throw std::invalid_argument("the lower quantile is undefined at tau = 0");
  }
  for (std::size_t k = 0; k < cumulative.size(); ++k) {
    if (cumulative[k] >= tau.value() - slack) return static_cast<EndIndex>(k + 1);
  }
  // F(g_n) = 1 >= tau; reached only if the input is not a proper cumulative.
  return static_cast<EndIndex>(cumulative.size());
}

EndIndex upper_quantile_of_decumulative(std::span<const double> decumulative, Tau tau, double slack) {
  if (tau.value() >= 1.0) {
    throw std::invalid_argument("the upper quantile is undefined at tau = 1");
  }
  const double level = 1.0 - tau.value();
  for (std::size_t k = decumulative.size(); k-- > 0;) {
    if (decumulative[k] >= level - slack) return static_cast<EndIndex>(k + 1);
  }
  return 1;
}

EndIndex lower_quantile(const EndStateDistribution& dist, Tau tau, double slack) {
  return lower_quantile_of_cumulative(prefix_sums(dist.probs()), tau, slack);
}

EndIndex upper_quantile(const EndStateDistribution& dist, Tau tau, double slack) {
  return upper_quantile_of_decumulative(suffix_sums(dist.probs()), tau, slack);
}

QuantileValue quantile(const EndStateDistribution& dist, Tau tau, double slack) {
  if (tau.value() == 0.0) {
    const EndIndex q = upper_quantile(dist, tau, slack);
    return {q, q};
  }
  if (tau.value() == 1.0) {
    const EndIndex q = lower_quantile(dist, tau, slack);
    return {q, q};
  }
  return {lower_quantile(dist, tau, slack), upper_quantile(dist, tau, slack)};
}

EndStateDistribution empirical_distribution(std::span<const EndIndex> terminals, int n) {
  if (terminals.empty()) {
    throw std::invalid_argument("empirical distribution of an empty sample");
  }
  if (n < 1) {
    throw std::invalid_argument("number of end states must be positive");
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(n), 0);
  for (EndIndex i : terminals) {
    if (i < 1 || i > n) {
      throw std::out_of_range(fmt::format("terminal index {} outside 1..{}", i, n));
    }
    ++counts[static_cast<std::size_t>(i - 1)];
  }
  std::vector<double> probs(counts.size());
  const auto total = static_cast<double>(terminals.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    probs[k] = static_cast<double>(counts[k]) / total;
  }
  return EndStateDistribution(std::move(probs));
}

double total_variation(const EndStateDistribution& a, const EndStateDistribution& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("total variation of distributions with different supports");
  }
  double acc = 0.0;
  for (EndIndex i = 1; i <= a.size(); ++i) acc += std::abs(a.prob(i) - b.prob(i));
  return 0.5 * acc;
}

}  // namespace qql
