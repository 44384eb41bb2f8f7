#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "qqlearn/environments.hpp"
#include "qqlearn/io.hpp"
#include "qqlearn/oracle.hpp"
#include "qqlearn/solver.hpp"

namespace qql {
namespace {

TEST(Wwtbam, DefaultGameShape) {
  const auto game = build_wwtbam(WwtbamConfig::standard());
  EXPECT_TRUE(validate_model(game).ok());
  EXPECT_EQ(game.num_end_states(), 16);
  EXPECT_EQ(game.horizon(), 15);
  int decision = 0;
  for (StateId s = 0; s < game.num_states(); ++s) decision += game.is_end(s) ? 0 : 1;
  EXPECT_EQ(decision, 120);
  EXPECT_EQ(game.initial(), wwtbam_state(1, 7));
  // Quit plus answers using each of the 8 subsets of three lifelines.
  EXPECT_EQ(game.num_actions(game.initial()), 9);
  EXPECT_EQ(game.num_actions(wwtbam_state(4, 0)), 2);
}

TEST(Wwtbam, EndStatesAreEveryReachableAmount) {
  const auto config = WwtbamConfig::standard();
  const auto ends = wwtbam_end_states(config);
  std::vector<std::int64_t> expected{0};
  for (int q = 0; q < 15; ++q) expected.push_back(100LL << q);
  EXPECT_EQ(ends.payouts, expected);
  EXPECT_EQ(ends.index_of(0), 1);
  EXPECT_EQ(ends.index_of(800), 5);
  EXPECT_EQ(ends.index_of(100LL << 14), 16);
  EXPECT_THROW(ends.index_of(5), std::out_of_range);
}

TEST(Wwtbam, GuaranteesAndQuitting) {
  const auto config = WwtbamConfig::standard();
  EXPECT_EQ(wwtbam_quit_payout(config, 1), 0);
  EXPECT_EQ(wwtbam_quit_payout(config, 6), config.payouts[4]);
  EXPECT_EQ(wwtbam_failure_payout(config, 5), 0);
  EXPECT_EQ(wwtbam_failure_payout(config, 6), config.payouts[4]);
  EXPECT_EQ(wwtbam_failure_payout(config, 12), config.payouts[9]);
  EXPECT_EQ(wwtbam_failure_payout(config, 15), config.payouts[9]);

  // The wrong-answer branch at question 12 lands on the amount of question 10.
  const auto game = build_wwtbam(config);
  const auto ends = wwtbam_end_states(config);
  const StateId s = wwtbam_state(12, 0);
  const auto t = game.transitions(s, 0);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(game.end_index(t[1].next), ends.index_of(config.payouts[9]));
}

TEST(Wwtbam, LifelinesOnlyHelp) {
  const auto config = WwtbamConfig::standard();
  for (int q = 1; q <= config.num_questions; ++q) {
    for (unsigned used = 0; used < 8; ++used) {
      for (unsigned more = used; more < 8; ++more) {
        if ((used & more) != used) continue;
        EXPECT_LE(wwtbam_success_probability(config, q, used), wwtbam_success_probability(config, q, more));
      }
      EXPECT_LE(wwtbam_success_probability(config, q, used), 1.0);
    }
  }
  // Using a lifeline removes it from the next question's mask.
  const auto game = build_wwtbam(config);
  const auto t = game.transitions(wwtbam_state(3, 5), 1);  // answer using lifeline 0
  EXPECT_EQ(t[0].next, wwtbam_state(4, 4));
}

TEST(Wwtbam, CertainAnswersReachTheTopPrize) {
  auto config = WwtbamConfig::standard();
  std::fill(config.base_prob.begin(), config.base_prob.end(), 1.0);
  const auto game = build_wwtbam(config);
  const auto g = optimal_decumulative(game);
  EXPECT_EQ(g.at(game.num_end_states()), 1.0);
  EXPECT_EQ(optimal_upper_quantile(game, Tau(0.5)), game.num_end_states());
}

TEST(Wwtbam, CoincidingAmountsShareAnEndState) {
  // Guarantee at question 1: failing at 2 keeps the amount of quitting at 2.
  WwtbamConfig config;
  config.num_questions = 3;
  config.payouts = {10, 20, 30};
  config.guarantee_questions = {1};
  config.base_prob = {0.9, 0.5, 0.5};
  const auto ends = wwtbam_end_states(config);
  EXPECT_EQ(ends.payouts, (std::vector<std::int64_t>{0, 10, 20, 30}));
  EXPECT_TRUE(validate_model(build_wwtbam(config)).ok());
}

TEST(Wwtbam, SingleQuestionGame) {
  WwtbamConfig config;
  config.num_questions = 1;
  config.payouts = {50};
  config.base_prob = {0.5};
  const auto game = build_wwtbam(config);
  EXPECT_EQ(wwtbam_end_states(config).payouts, (std::vector<std::int64_t>{0, 50}));
  EXPECT_EQ(game.horizon(), 1);
  EXPECT_NEAR(optimal_decumulative(game).at(2), 0.5, 1e-15);
}

TEST(Wwtbam, SingleLifelinePerQuestion) {
  auto config = WwtbamConfig::standard();
  config.single_lifeline_per_question = true;
  const auto game = build_wwtbam(config);
  EXPECT_EQ(game.num_actions(game.initial()), 5);
  const auto full = optimal_decumulative(build_wwtbam(WwtbamConfig::standard()));
  const auto restricted = optimal_decumulative(game);
  for (EndIndex i = 1; i <= game.num_end_states(); ++i) EXPECT_LE(restricted.at(i), full.at(i) + 1e-15);
}

TEST(Wwtbam, NoQuitAtFirstQuestion) {
  auto config = WwtbamConfig::standard();
  config.allow_quit_at_first = false;
  const auto game = build_wwtbam(config);
  EXPECT_EQ(game.num_actions(game.initial()), 8);
  EXPECT_EQ(game.num_actions(wwtbam_state(2, 7)), 9);
}

TEST(Wwtbam, ReducedLifelineSetsNeverReachMissingMasks) {
  auto config = WwtbamConfig::standard();
  config.lifelines.resize(1);
  const auto game = build_wwtbam(config);
  EXPECT_TRUE(validate_model(game).ok());
  EXPECT_EQ(game.initial(), wwtbam_state(1, 1));
  for (const auto& layer : reachable_layers(game)) {
    for (StateId s : layer) {
      if (!game.is_end(s)) {
        EXPECT_LE(s % 8, 1) << game.state_label(s);
      }
    }
  }
}

TEST(Wwtbam, ConfigErrors) {
  auto config = WwtbamConfig::standard();
  config.payouts[3] = config.payouts[2];
  EXPECT_FALSE(validate_wwtbam_config(config).empty());
  EXPECT_THROW(build_wwtbam(config), ModelError);

  config = WwtbamConfig::standard();
  config.base_prob[0] = 1.5;
  EXPECT_FALSE(validate_wwtbam_config(config).empty());

  config = WwtbamConfig::standard();
  config.guarantee_questions = {16};
  EXPECT_FALSE(validate_wwtbam_config(config).empty());

  config = WwtbamConfig::standard();
  config.lifelines[1].boost.pop_back();
  EXPECT_FALSE(validate_wwtbam_config(config).empty());

  config = WwtbamConfig::standard();
  config.lifelines.push_back(config.lifelines[0]);
  EXPECT_FALSE(validate_wwtbam_config(config).empty());

  config = WwtbamConfig::standard();
  config.num_questions = 0;
  EXPECT_FALSE(validate_wwtbam_config(config).empty());

  EXPECT_TRUE(validate_wwtbam_config(WwtbamConfig::standard()).empty());
}

TEST(Wwtbam, ShippedConfigIsTheDefaultGame) {
  const auto shipped = build_wwtbam(load_wwtbam_config(testing::source_path("configs/default_wwtbam.json")));
  const auto reference = build_wwtbam(WwtbamConfig::standard());
  ASSERT_EQ(shipped.num_states(), reference.num_states());
  EXPECT_EQ(optimal_decumulative(shipped).values, optimal_decumulative(reference).values);
  EXPECT_EQ(optimal_cumulative(shipped).values, optimal_cumulative(reference).values);
}

TEST(Wwtbam, DecumulativeEnvelopeHead) {
  const auto g = optimal_decumulative(build_wwtbam(WwtbamConfig::standard()));
  EXPECT_EQ(g.at(1), 1.0);
  EXPECT_EQ(g.at(2), 1.0);
  EXPECT_NEAR(g.at(3), 0.95, 1e-12);
  for (EndIndex i = 2; i <= 16; ++i) EXPECT_LE(g.at(i), g.at(i - 1));
  EXPECT_EQ(optimal_upper_quantile(build_wwtbam(WwtbamConfig::standard()), Tau(0.3)), 5);
}

TEST(Fixtures, ExampleOneAndToy) {
  const auto [m, policy] = build_example1();
  EXPECT_TRUE(validate_model(m).ok());
  const auto d = exact_end_distribution(m, policy);
  EXPECT_EQ(std::vector<double>(d.probs().begin(), d.probs().end()), (std::vector<double>{0.5, 0.2, 0.3}));
  const auto toy = build_two_action_toy();
  EXPECT_TRUE(validate_model(toy).ok());
  EXPECT_EQ(toy.num_actions(toy.initial()), 2);
}

TEST(RandomMdp, AlwaysValidAndWithinLimits) {
  const RandomMdpLimits limits;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(derive_seed(99, seed));
    const auto m = random_small_mdp(rng, limits);
    ASSERT_TRUE(validate_model(m).ok()) << "seed " << seed;
    EXPECT_LE(m.horizon(), limits.max_horizon);
    EXPECT_LE(m.num_end_states(), limits.max_end_states);
    EXPECT_LE(m.max_actions(), limits.max_actions);
    EXPECT_LE(m.num_states() - m.num_end_states(), limits.max_decision_states);
  }
}

TEST(RandomMdp, GridProbabilities) {
  RandomMdpLimits limits;
  limits.probability_grid = 10;
  Rng rng(3);
  const auto m = random_small_mdp(rng, limits);
  for (StateId s = 0; s < m.num_states(); ++s) {
    for (ActionId a = 0; a < m.num_actions(s); ++a) {
      for (const auto& t : m.transitions(s, a)) {
        EXPECT_NEAR(t.prob * 10.0, std::round(t.prob * 10.0), 1e-9);
      }
    }
  }
}

TEST(RandomMdp, DeterministicUnderSeed) {
  Rng a(12);
  Rng b(12);
  const auto m1 = random_small_mdp(a);
  const auto m2 = random_small_mdp(b);
  ASSERT_EQ(m1.num_states(), m2.num_states());
  EXPECT_EQ(optimal_decumulative(m1).values, optimal_decumulative(m2).values);
}

TEST(RandomMdp, PolicyBound) {
  EXPECT_EQ(random_mdp_policy_bound(RandomMdpLimits{}), 177147u);  // 3^(1 + 5 * 2)
  RandomMdpLimits huge;
  huge.max_decision_states = 100;
  huge.max_horizon = 100;
  EXPECT_EQ(random_mdp_policy_bound(huge), std::numeric_limits<std::uint64_t>::max());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(derive_seed(5, seed));
    EXPECT_LE(count_policies(random_small_mdp(rng)), 177147u);
  }
}

}  // namespace
}  // namespace qql
