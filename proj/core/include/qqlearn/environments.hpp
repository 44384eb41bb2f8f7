#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qqlearn/model.hpp"
#include "qqlearn/random.hpp"

namespace qql {

// ---------------------------------------------------------------------------
// "Who Wants to Be a Millionaire"
// ---------------------------------------------------------------------------

struct Lifeline {
  std::string name;
  /// Additive success-probability boost per question (entry q-1).
  std::vector<double> boost;
};

/// Game-show parameters. Question q (1-based) pays payouts[q-1] when
/// answered; base_prob[q-1] is the unaided success probability.
///
/// The numbers in standard() are calibration placeholders: a linear
/// difficulty ramp 0.95 -> 0.35 and boosts proportional to 1 - p_q
/// (50:50 half, audience 0.3, phone 0.2). They are not measured data.
struct WwtbamConfig {
  int num_questions = 15;
  std::vector<std::int64_t> payouts;
  std::vector<int> guarantee_questions;
  std::vector<double> base_prob;
  std::vector<Lifeline> lifelines;
  bool allow_quit_at_first = true;
  bool single_lifeline_per_question = false;

  static WwtbamConfig standard();
};

/// Lifelines per game. Configs may provide fewer (reduced games); masks of
/// missing lifelines are never reachable.
inline constexpr int kWwtbamLifelines = 3;

/// Field-level problems with the config; empty when it is usable.
std::vector<std::string> validate_wwtbam_config(const WwtbamConfig& config);

/// Distinct payout amounts, ascending; end state g_i pays payouts[i-1].
struct WwtbamEndStates {
  std::vector<std::int64_t> payouts;

  int size() const { return static_cast<int>(payouts.size()); }
  /// Throws std::out_of_range for an amount that is not an end state.
  EndIndex index_of(std::int64_t amount) const;
  EndStateSet labels() const;
};

WwtbamEndStates wwtbam_end_states(const WwtbamConfig& config);

/// Amount kept when walking away before question q.
std::int64_t wwtbam_quit_payout(const WwtbamConfig& config, int q);
/// Amount kept after a wrong answer at question q: the payout of the highest
/// guarantee question strictly below q, or 0.
std::int64_t wwtbam_failure_payout(const WwtbamConfig& config, int q);
/// Success probability at question q using the lifelines in `used`
/// (bit l = lifeline l), clipped to 1.
double wwtbam_success_probability(const WwtbamConfig& config, int q, unsigned used);

/// State id of decision state (question q, available-lifeline mask).
StateId wwtbam_state(int q, unsigned mask);

/// Builds the game as an episodic model. Decision states are
/// (question, available lifelines); actions are "quit" and "answer using L"
/// for every subset L of the available lifelines. Throws ModelError with the
/// config diagnostics when the config is invalid.
EpisodicModel build_wwtbam(const WwtbamConfig& config);

// ---------------------------------------------------------------------------
// Small analytic fixtures
// ---------------------------------------------------------------------------

/// One decision state, one action reaching g_1, g_2, g_3 with probabilities
/// 0.5, 0.2, 0.3, and the only policy.
std::pair<EpisodicModel, Policy> build_example1();

/// s_0 with a_1 -> g_1 and a_2 -> g_2 deterministically; n = 2, T = 1.
EpisodicModel build_two_action_toy();

struct RandomMdpLimits {
  int max_decision_states = 6;
  int max_actions = 3;
  int max_horizon = 3;
  int max_end_states = 4;
  /// When positive, probabilities are multiples of 1/probability_grid.
  int probability_grid = 0;
};

/// Random layered model that always terminates within its horizon. Decision
/// states of layer l move only to end states or to states of later layers.
EpisodicModel random_small_mdp(Rng& rng, const RandomMdpLimits& limits = {});

/// Upper bound on the reachable-policy count of any model random_small_mdp can
/// draw under `limits` (saturating at UINT64_MAX). s0 is a decision point at
/// t = 1 only and a state of layer l can be reached at steps 2..l, so there
/// are at most 1 + (S - 1)(T - 1) decision points.
std::uint64_t random_mdp_policy_bound(const RandomMdpLimits& limits);

}  // namespace qql
