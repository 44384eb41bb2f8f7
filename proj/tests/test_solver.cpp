#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "qqlearn/environments.hpp"
#include "qqlearn/oracle.hpp"
#include "qqlearn/solver.hpp"

namespace qql {
namespace {

using testing::deterministic_chain;
using testing::single_lottery;

TEST(SolveTheta, TwoActionToyByHand) {
  const auto toy = build_two_action_toy();
  const auto v15 = solve_theta(toy, 1.5, Objective::kUpper);
  EXPECT_DOUBLE_EQ(v15.root_value(), 1.0);
  EXPECT_EQ(v15.greedy().at(1, toy.initial()), 1);
  const auto v25 = solve_theta(toy, 2.5, Objective::kUpper);
  EXPECT_DOUBLE_EQ(v25.root_value(), 0.5);
  EXPECT_EQ(v25.greedy().at(1, toy.initial()), 1);
}

TEST(SolveTheta, ToyRootValueIsPiecewiseLinear) {
  const auto toy = build_two_action_toy();
  for (int k = 0; k <= 300; ++k) {
    const double theta = k / 100.0;
    const double expected = theta <= 2.0 ? 1.0 : 3.0 - theta;
    EXPECT_NEAR(solve_theta(toy, theta, Objective::kUpper).root_value(), expected, 1e-12) << theta;
  }
}

TEST(SolveTheta, ThetaZeroPaysOneEverywhere) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(8, seed));
    EXPECT_DOUBLE_EQ(solve_theta(random_small_mdp(rng), 0.0, Objective::kUpper).root_value(), 1.0);
  }
}

TEST(SolveTheta, TieBreakPrefersLowestAction) {
  // Both actions reach g_2 at theta = 1: the rewards tie at 1.
  const auto toy = build_two_action_toy();
  EXPECT_EQ(solve_theta(toy, 1.0, Objective::kUpper).greedy().at(1, 0), 0);
}

TEST(SolveEndRewards, ExpectedPayoff) {
  const auto m = testing::two_step_model();
  const std::vector<double> rewards{0.0, 1.0};
  // Best: risky at x (0.5 now) then high at y (0.5 * 0.6).
  EXPECT_NEAR(solve_end_rewards(m, rewards).root_value(), 0.8, 1e-15);
  EXPECT_THROW(solve_end_rewards(m, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Envelope, Examples) {
  const auto toy = build_two_action_toy();
  EXPECT_EQ(optimal_decumulative(toy).values, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(optimal_cumulative(toy).values, (std::vector<double>{0.0, 1.0}));
  const auto chain = deterministic_chain(3, 2);
  EXPECT_EQ(optimal_decumulative(chain).values, (std::vector<double>{1.0, 1.0, 0.0}));
  EXPECT_EQ(optimal_cumulative(chain).values, (std::vector<double>{0.0, 1.0, 1.0}));
}

TEST(OptimalQuantile, Examples) {
  const auto toy = build_two_action_toy();
  EXPECT_EQ(optimal_upper_quantile(toy, Tau(0.3)), 2);
  EXPECT_EQ(optimal_lower_quantile(toy, Tau(0.5)), 2);
  EXPECT_EQ(optimal_upper_quantile(single_lottery({0.4, 0.6}), Tau(0.3)), 1);

  const auto example1 = build_example1().first;
  EXPECT_EQ(optimal_lower_quantile(example1, Tau(0.5)), 1);
  EXPECT_EQ(optimal_upper_quantile(example1, Tau(0.5)), 2);
  EXPECT_EQ(optimal_lower_quantile(example1, Tau(1.0)), 3);
  EXPECT_EQ(optimal_upper_quantile(example1, Tau(0.0)), 1);
  // Guaranteed outcome: the safe line of the two-step model always reaches g1,
  // the risky one does not guarantee g2.
  EXPECT_EQ(optimal_upper_quantile(testing::two_step_model(), Tau(0.0)), 1);
  EXPECT_THROW(optimal_upper_quantile(toy, Tau(1.0)), std::invalid_argument);
  EXPECT_THROW(optimal_lower_quantile(toy, Tau(0.0)), std::invalid_argument);
}

// Independent envelope: max/min over every enumerated policy's distribution.
struct EnumeratedEnvelope {
  std::vector<double> max_g;
  std::vector<double> min_f;
};

EnumeratedEnvelope enumerate_envelope(const EpisodicModel& m) {
  const int n = m.num_end_states();
  EnumeratedEnvelope e{std::vector<double>(static_cast<std::size_t>(n), 0.0),
                       std::vector<double>(static_cast<std::size_t>(n), 1.0)};
  PolicyEnumerator it(m);
  while (it.next()) {
    const auto d = exact_end_distribution(m, it.current());
    for (EndIndex i = 1; i <= n; ++i) {
      auto k = static_cast<std::size_t>(i - 1);
      e.max_g[k] = std::max(e.max_g[k], decumulative(d, i));
      e.min_f[k] = std::min(e.min_f[k], cumulative(d, i));
    }
  }
  return e;
}

class EnvelopeOracle : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(EnvelopeOracle, MatchesEnumerationAndGreedyAttainsIt) {
  Rng rng(derive_seed(1234, GetParam()));
  const auto m = random_small_mdp(rng);
  const auto g = optimal_decumulative(m);
  const auto f = optimal_cumulative(m);
  const auto brute = enumerate_envelope(m);
  for (EndIndex i = 1; i <= m.num_end_states(); ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    EXPECT_NEAR(g.at(i), brute.max_g[k], 1e-12) << "G* at " << i;
    EXPECT_NEAR(f.at(i), brute.min_f[k], 1e-12) << "F* at " << i;
    // The greedy policy of the integer-threshold solve attains G*(g_i).
    const auto d = exact_end_distribution(m, solve_theta(m, i, Objective::kUpper).greedy());
    EXPECT_NEAR(decumulative(d, i), g.at(i), 1e-12);
  }
}

TEST_P(EnvelopeOracle, RootValueNonIncreasingAndLipschitz) {
  Rng rng(derive_seed(4321, GetParam()));
  const auto m = random_small_mdp(rng);
  const int n = m.num_end_states();
  for (Objective obj : {Objective::kUpper, Objective::kLower}) {
    double prev = solve_theta(m, 0.0, obj).root_value();
    for (int k = 1; k <= (n + 1) * 20; ++k) {
      const double v = solve_theta(m, k * 0.05, obj).root_value();
      EXPECT_LE(v, prev + 1e-12);
      EXPECT_LE(prev - v, 0.05 + 1e-12);
      prev = v;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, EnvelopeOracle, ::testing::Range<std::uint64_t>(0, 100));

TEST(SimpleStrategy, ToyConvergesToCrossing) {
  const auto search = simple_strategy(build_two_action_toy(), Tau(0.3), 10'000, 1.0);
  EXPECT_EQ(search.theta.size(), 10'001u);
  EXPECT_NEAR(search.final_theta(), 2.3, 0.2);
  EXPECT_NEAR(search.trailing_mean(0.1), 2.3, 0.01);
}

TEST(SimpleStrategy, StepsAreHarmonic) {
  const auto search = simple_strategy(build_two_action_toy(), Tau(0.3), 200, 1.0);
  for (std::size_t n = 1; n < search.theta.size(); ++n) {
    EXPECT_NEAR(std::abs(search.theta[n] - search.theta[n - 1]), 1.0 / static_cast<double>(n), 1e-12);
  }
}

TEST(SimpleStrategy, AlwaysAboveTargetDriftsToTheClamp) {
  // All mass on g_3 of 3: V* >= 0.01 until theta = 3.99.
  const auto chain = deterministic_chain(3, 3);
  const auto search = simple_strategy(chain, Tau(0.99), 5000, 1.0);
  EXPECT_GT(search.final_theta(), 3.9);
  EXPECT_LE(search.final_theta(), 4.0);
}

TEST(SimpleStrategy, RejectsDegenerateTau) {
  const auto toy = build_two_action_toy();
  EXPECT_THROW(simple_strategy(toy, Tau(0.0), 10, 1.0), std::invalid_argument);
  EXPECT_THROW(simple_strategy(toy, Tau(1.0), 10, 1.0), std::invalid_argument);
}

TEST(SimpleStrategy, LowerObjectiveOnToy) {
  // R_lower at theta in (2,3): g2 pays 2 - theta, so V* = 2 - theta; target -0.3.
  const auto search = simple_strategy(build_two_action_toy(), Tau(0.3), 10'000, 1.0, Objective::kLower);
  EXPECT_NEAR(search.trailing_mean(0.1), 2.3, 0.01);
}

TEST(ThresholdCrossing, ToyIsAnalytic) {
  EXPECT_NEAR(threshold_crossing(build_two_action_toy(), Tau(0.3)), 2.3, 1e-9);
  EXPECT_NEAR(threshold_crossing(build_two_action_toy(), Tau(0.3), Objective::kLower), 2.3, 1e-9);
}

TEST(ThresholdCrossing, FloorIsTheOptimalUpperQuantile) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(derive_seed(55, seed));
    const auto m = random_small_mdp(rng);
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double theta = threshold_crossing(m, Tau(tau));
      EXPECT_EQ(quantile_from_theta(theta, m.num_end_states()), optimal_upper_quantile(m, Tau(tau)))
          << "seed " << seed << " tau " << tau;
    }
  }
}

TEST(Solver, RejectsInvalidModels) {
  EpisodicModel bad = build_two_action_toy();
  bad.set_horizon(0);
  EXPECT_THROW(solve_theta(bad, 1.0, Objective::kUpper), ModelError);
  EXPECT_THROW(optimal_decumulative(bad), ModelError);
}

}  // namespace
}  // namespace qql
