#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qqlearn/environments.hpp"
#include "qqlearn/model.hpp"
#include "qqlearn/quantile.hpp"

namespace qql {
namespace {

using testing::deterministic_chain;
using testing::two_step_model;

bool has_violation(const ValidationReport& report, ViolationKind kind) {
  for (const auto& v : report.violations) {
    if (v.kind == kind) return true;
  }
  return false;
}

TEST(Validate, WellFormedToyIsClean) {
  EXPECT_TRUE(validate_model(build_two_action_toy()).ok());
  EXPECT_TRUE(validate_model(two_step_model()).ok());
  EXPECT_TRUE(validate_model(build_example1().first).ok());
}

TEST(Validate, RowSumOffIsReportedWithLocation) {
  EpisodicModel m = build_two_action_toy();
  m.add_action(0, "leaky");
  m.add_transition(0, 2, 1, 0.9);
  const auto report = validate_model(m);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].kind, ViolationKind::kNormalization);
  EXPECT_NE(report.violations[0].where.find("action 2"), std::string::npos);
  EXPECT_THROW(require_valid(m), ModelError);
}

TEST(Validate, RowSumToleranceIsTight) {
  EpisodicModel m = testing::single_lottery({0.5, 0.5 - 1e-10});
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kNormalization));
  EpisodicModel ok = testing::single_lottery({0.5, 0.5 - 1e-13});
  EXPECT_TRUE(validate_model(ok).ok());
}

TEST(Validate, CycleBlockingTerminationIsReported) {
  EpisodicModel m;
  const StateId a = m.add_state("a");
  const StateId b = m.add_state("b");
  const StateId g = m.add_state("g");
  m.add_action(a, "to_b");
  m.add_transition(a, 0, b, 1.0);
  m.add_action(b, "back");
  m.add_transition(b, 0, a, 0.5);
  m.add_transition(b, 0, g, 0.5);
  m.set_initial(a);
  m.set_horizon(5);
  m.set_end_states({g});
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kTermination));
}

TEST(Validate, HorizonTooShortIsReported) {
  EpisodicModel m = two_step_model();
  m.set_horizon(1);
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kTermination));
}

TEST(Validate, EndStateWithOutgoingTransitionsIsReported) {
  EpisodicModel m = build_two_action_toy();
  m.add_action(1, "escape");
  m.add_transition(1, 0, 2, 1.0);
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kEndStateOutgoing));
}

TEST(Validate, DecisionStateWithoutActionsIsReported) {
  EpisodicModel m;
  const StateId s0 = m.add_state("s0");
  const StateId g = m.add_state("g");
  m.set_initial(s0);
  m.set_horizon(1);
  m.set_end_states({g});
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kAction));
}

TEST(Validate, InitialStateMustBeADecisionState) {
  EpisodicModel m = build_two_action_toy();
  m.set_initial(1);
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kInitialState));
  m.set_initial(42);
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kInitialState));
}

TEST(Validate, NegativeProbabilityAndBadTargetAreReported) {
  EpisodicModel m = testing::single_lottery({0.5, 0.5});
  m.add_action(0, "weird");
  m.add_transition(0, 1, 1, 1.5);
  m.add_transition(0, 1, 2, -0.5);
  EXPECT_TRUE(has_violation(validate_model(m), ViolationKind::kTransition));
  // Unknown targets are accepted while building and reported by validation.
  EpisodicModel far = testing::single_lottery({1.0});
  far.add_transition(0, 0, 99, 0.0);
  EXPECT_TRUE(has_violation(validate_model(far), ViolationKind::kTransition));
  EXPECT_THROW(m.add_transition(0, 7, 1, 0.1), ModelError);
}

TEST(Validate, NoEndStatesIsReported) {
  EpisodicModel m;
  m.add_state("s0");
  m.set_initial(0);
  m.set_horizon(1);
  EXPECT_FALSE(validate_model(m).ok());
}

TEST(SampleTransition, DeterministicEdge) {
  const auto m = deterministic_chain(3, 2);
  Rng rng(1);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(sample_transition(m, 0, 0, rng), m.end_state(2));
}

TEST(SampleTransition, FairCoinFrequencies) {
  const auto m = testing::single_lottery({0.5, 0.5});
  Rng rng(7);
  int first = 0;
  constexpr int kDraws = 1'000'000;
  for (int k = 0; k < kDraws; ++k) first += sample_transition(m, 0, 0, rng) == m.end_state(1) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(first) / kDraws, 0.5, 0.01);
}

TEST(SampleTransition, SameSeedSameSequence) {
  const auto m = two_step_model();
  Rng a(99);
  Rng b(99);
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(sample_transition(m, 0, 1, a), sample_transition(m, 0, 1, b));
}

TEST(SampleTransition, RejectsBadInputs) {
  const auto m = build_two_action_toy();
  Rng rng(1);
  EXPECT_THROW(sample_transition(m, 0, 5, rng), ModelError);
  EXPECT_THROW(sample_transition(m, 0, -1, rng), ModelError);
  EXPECT_THROW(sample_transition(m, 1, 0, rng), ModelError);
}

TEST(Rollout, DeterministicChainReachesItsEnd) {
  const auto m = build_two_action_toy();
  Rng rng(3);
  const auto episode = rollout(m, Policy::stationary(1, {1, 0, 0}), rng);
  EXPECT_EQ(episode.terminal, 2);
  ASSERT_EQ(episode.length(), 1u);
  EXPECT_EQ(episode.steps[0].state, m.initial());
  EXPECT_EQ(episode.steps[0].action, 1);
}

TEST(Rollout, ExampleOneFrequencies) {
  const auto [m, policy] = build_example1();
  Rng rng(11);
  std::vector<EndIndex> terminals;
  for (int k = 0; k < 100'000; ++k) terminals.push_back(rollout(m, policy, rng).terminal);
  const auto freq = empirical_distribution(terminals, 3);
  EXPECT_NEAR(freq.prob(1), 0.5, 0.01);
  EXPECT_NEAR(freq.prob(2), 0.2, 0.01);
  EXPECT_NEAR(freq.prob(3), 0.3, 0.01);
}

TEST(Rollout, LengthNeverExceedsHorizon) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng gen(derive_seed(5, seed));
    const auto m = random_small_mdp(gen);
    Policy p(m.horizon(), m.num_states());
    for (int t = 1; t <= m.horizon(); ++t) {
      for (StateId s = 0; s < m.num_states(); ++s) {
        if (!m.is_end(s)) p.set(t, s, static_cast<ActionId>(seed % static_cast<std::uint64_t>(m.num_actions(s))));
      }
    }
    Rng rng(seed);
    for (int k = 0; k < 20; ++k) {
      const auto e = rollout(m, p, rng);
      EXPECT_LE(static_cast<int>(e.length()), m.horizon());
      EXPECT_TRUE(m.is_end(e.terminal_state));
      EXPECT_EQ(e.steps.front().state, m.initial());
    }
  }
}

TEST(Rollout, UndefinedRuleIsRejected) {
  const auto m = two_step_model();
  Policy p(2, m.num_states());
  p.set(1, 0, 0);
  Rng rng(1);
  EXPECT_THROW(rollout(m, p, rng), std::exception);
  EXPECT_THROW(exact_end_distribution(m, p), std::exception);
}

TEST(ExactDistribution, ExampleOneIsExact) {
  const auto [m, policy] = build_example1();
  const auto d = exact_end_distribution(m, policy);
  EXPECT_EQ(d.prob(1), 0.5);
  EXPECT_EQ(d.prob(2), 0.2);
  EXPECT_EQ(d.prob(3), 0.3);
}

TEST(ExactDistribution, DeterministicChainIsUnitMass) {
  const auto m = deterministic_chain(4, 3);
  const auto d = exact_end_distribution(m, Policy::stationary(1, std::vector<ActionId>(5, 0)));
  EXPECT_EQ(d.prob(3), 1.0);
  EXPECT_EQ(d.prob(1) + d.prob(2) + d.prob(4), 0.0);
}

TEST(ExactDistribution, TwoStepHandComputation) {
  const auto m = two_step_model();
  // risky then high: 0.5 to g2 now, 0.5 * 0.6 later.
  const auto d = exact_end_distribution(m, Policy::stationary(2, {1, 1, 0, 0}));
  EXPECT_NEAR(d.prob(2), 0.8, 1e-15);
  EXPECT_NEAR(d.prob(1), 0.2, 1e-15);
}

// Random policies on random models: mass sums to 1 and sampling agrees.
class RandomModelDistribution : public ::testing::TestWithParam<std::uint64_t> {};

Policy random_policy(const EpisodicModel& m, Rng& rng) {
  Policy p(m.horizon(), m.num_states());
  for (int t = 1; t <= m.horizon(); ++t) {
    for (StateId s = 0; s < m.num_states(); ++s) {
      if (!m.is_end(s)) p.set(t, s, static_cast<ActionId>(rng.below(static_cast<std::uint64_t>(m.num_actions(s)))));
    }
  }
  return p;
}

TEST_P(RandomModelDistribution, SumsToOne) {
  Rng rng(derive_seed(2024, GetParam()));
  const auto m = random_small_mdp(rng);
  ASSERT_TRUE(validate_model(m).ok());
  const auto d = exact_end_distribution(m, random_policy(m, rng));
  double total = 0.0;
  for (double p : d.probs()) total += p;
  EXPECT_NEAR(total, 1.0, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomModelDistribution, ::testing::Range<std::uint64_t>(0, 100));

TEST(ExactDistribution, MatchesMonteCarloOnRandomModels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(77, seed));
    const auto m = random_small_mdp(rng);
    const auto policy = random_policy(m, rng);
    const auto exact = exact_end_distribution(m, policy);
    constexpr int kEpisodes = 100'000;
    std::vector<EndIndex> terminals;
    terminals.reserve(kEpisodes);
    for (int k = 0; k < kEpisodes; ++k) terminals.push_back(rollout(m, policy, rng).terminal);
    const auto tv = total_variation(empirical_distribution(terminals, m.num_end_states()), exact);
    EXPECT_LE(tv, 3.0 * std::sqrt(static_cast<double>(m.num_end_states()) / kEpisodes)) << "seed " << seed;
  }
}

TEST(ExactDistribution, MatchesMillionRolloutsTightly) {
  Rng rng(derive_seed(31, 0));
  const auto m = random_small_mdp(rng);
  const auto policy = random_policy(m, rng);
  const auto exact = exact_end_distribution(m, policy);
  std::vector<EndIndex> terminals;
  terminals.reserve(1'000'000);
  for (int k = 0; k < 1'000'000; ++k) terminals.push_back(rollout(m, policy, rng).terminal);
  const auto empirical = empirical_distribution(terminals, m.num_end_states());
  for (EndIndex i = 1; i <= m.num_end_states(); ++i) EXPECT_NEAR(empirical.prob(i), exact.prob(i), 0.005);
}

TEST(ExactDistribution, RolloutsArePureFunctionsOfTheSeed) {
  const auto m = two_step_model();
  const auto p = Policy::stationary(2, {1, 1, 0, 0});
  Rng a(5);
  Rng b(5);
  for (int k = 0; k < 200; ++k) EXPECT_EQ(rollout(m, p, a).terminal, rollout(m, p, b).terminal);
}

TEST(Distribution, RejectsBadVectors) {
  EXPECT_THROW(EndStateDistribution({0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(EndStateDistribution({1.1, -0.1}), std::invalid_argument);
  EXPECT_NO_THROW(EndStateDistribution({0.5, 0.5 + 1e-12}));
}

TEST(ReachableLayers, TwoStepModel) {
  const auto layers = reachable_layers(two_step_model());
  ASSERT_EQ(layers.size(), 2u);
  EXPECT_EQ(layers[0], std::vector<StateId>({0}));
  EXPECT_EQ(layers[1], std::vector<StateId>({1}));
}

TEST(Simulator, HidesProbabilitiesButSteps) {
  const auto m = build_two_action_toy();
  const Simulator sim(m);
  Rng rng(1);
  EXPECT_EQ(sim.initial(), 0);
  EXPECT_EQ(sim.num_end_states(), 2);
  EXPECT_EQ(sim.end_index(sim.step(0, 1, rng)), 2);
}

TEST(Random, SplitStreamsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(9, 4), derive_seed(9, 4));
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace qql
