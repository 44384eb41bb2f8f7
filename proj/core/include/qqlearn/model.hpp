#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qqlearn/random.hpp"

namespace qql {

using StateId = int;
using ActionId = int;

/// Position of an end state in the preference order, 1-based:
/// g_1 is the least preferred end state and g_n the most preferred.
/// The value 0 never names an end state.
using EndIndex = int;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Transition {
  StateId next = 0;
  double prob = 0.0;
};

/// Ordered end-state labels; index i (1-based) is strictly preferred to i-1.
class EndStateSet {
 public:
  EndStateSet() = default;
  explicit EndStateSet(std::vector<std::string> labels) : labels_(std::move(labels)) {}

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(EndIndex i) const { return labels_.at(static_cast<std::size_t>(i - 1)); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

/// Finite episodic MDP whose episodes terminate in an ordered set of
/// absorbing end states within `horizon` steps.
///
/// States and actions are dense indices. The model is mutable while it is
/// being assembled; every consumer validates it (validate_model) before use.
class EpisodicModel {
 public:
  StateId add_state(std::string label = {});
  ActionId add_action(StateId s, std::string label = {});
  void add_transition(StateId s, ActionId a, StateId next, double prob);

  void set_initial(StateId s) { initial_ = s; }
  void set_horizon(int horizon) { horizon_ = horizon; }
  /// Declares `states` as the end states, in increasing order of preference.
  void set_end_states(std::vector<StateId> states, std::vector<std::string> labels = {});
  /// Marks the state as already encoding the decision step (e.g. a question
  /// number), so learners may share one Q layer across time.
  void set_progress_encoded(bool encoded) { progress_encoded_ = encoded; }

  int num_states() const { return static_cast<int>(states_.size()); }
  int num_actions(StateId s) const { return static_cast<int>(states_.at(static_cast<std::size_t>(s)).actions.size()); }
  int max_actions() const;
  std::span<const Transition> transitions(StateId s, ActionId a) const;

  StateId initial() const { return initial_; }
  int horizon() const { return horizon_; }
  bool progress_encoded() const { return progress_encoded_; }

  int num_end_states() const { return end_states_.size(); }
  const EndStateSet& end_states() const { return end_states_; }
  /// End index of `s`, or 0 when `s` is not an end state.
  EndIndex end_index(StateId s) const { return end_of_state_.at(static_cast<std::size_t>(s)); }
  bool is_end(StateId s) const { return end_index(s) != 0; }
  StateId end_state(EndIndex i) const { return end_state_ids_.at(static_cast<std::size_t>(i - 1)); }

  const std::string& state_label(StateId s) const { return states_.at(static_cast<std::size_t>(s)).label; }
  const std::string& action_label(StateId s, ActionId a) const;

 private:
  struct ActionData {
    std::string label;
    std::vector<Transition> transitions;
  };
  struct StateData {
    std::string label;
    std::vector<ActionData> actions;
  };

  const StateData& state(StateId s) const;

  std::vector<StateData> states_;
  std::vector<EndIndex> end_of_state_;
  std::vector<StateId> end_state_ids_;
  EndStateSet end_states_;
  StateId initial_ = 0;
  int horizon_ = 0;
  bool progress_encoded_ = false;
};

/// Deterministic Markovian decision rules for steps t = 1..horizon.
class Policy {
 public:
  static constexpr ActionId kUndefined = -1;

  Policy() = default;
  Policy(int horizon, int num_states);

  /// Same action at every step.
  static Policy stationary(int horizon, const std::vector<ActionId>& actions);

  ActionId at(int t, StateId s) const;
  void set(int t, StateId s, ActionId a);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }

  bool operator==(const Policy&) const = default;

 private:
  std::size_t offset(int t, StateId s) const;

  int horizon_ = 0;
  int num_states_ = 0;
  std::vector<ActionId> table_;
};

struct Episode {
  struct Step {
    StateId state;
    ActionId action;
  };
  std::vector<Step> steps;
  StateId terminal_state = 0;
  EndIndex terminal = 0;

  std::size_t length() const { return steps.size(); }
};

/// Probability vector over end states g_1..g_n.
class EndStateDistribution {
 public:
  /// Throws std::invalid_argument unless all entries are non-negative and
  /// sum to 1 within 1e-9.
  explicit EndStateDistribution(std::vector<double> probs);

  int size() const { return static_cast<int>(probs_.size()); }
  double prob(EndIndex i) const { return probs_.at(static_cast<std::size_t>(i - 1)); }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

enum class ViolationKind {
  kStructure,
  kInitialState,
  kHorizon,
  kAction,
  kTransition,
  kNormalization,
  kEndStateOutgoing,
  kTermination,
};

struct Violation {
  ViolationKind kind;
  std::string where;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_model(const EpisodicModel& model);

/// Throws ModelError carrying the report when the model is invalid.
void require_valid(const EpisodicModel& model);

/// Draws s' ~ P(s, a, .). Rejects end states and inadmissible actions.
StateId sample_transition(const EpisodicModel& model, StateId s, ActionId a, Rng& rng);

/// Follows `policy` from the initial state until an end state is entered.
Episode rollout(const EpisodicModel& model, const Policy& policy, Rng& rng);

/// End-state distribution of `policy` computed by forward propagation of the
/// state-occupancy mass.
EndStateDistribution exact_end_distribution(const EpisodicModel& model, const Policy& policy);

/// Non-end states reachable at each decision step t = 1..T under some policy;
/// element t-1 lists the states for step t in increasing order.
std::vector<std::vector<StateId>> reachable_layers(const EpisodicModel& model);

/// Sample-only access to a model: learners can simulate steps and observe
/// end-state classification but cannot read transition probabilities.
class Simulator {
 public:
  explicit Simulator(const EpisodicModel& model) : model_(&model) {}

  StateId initial() const { return model_->initial(); }
  int horizon() const { return model_->horizon(); }
  int num_states() const { return model_->num_states(); }
  int num_actions(StateId s) const { return model_->num_actions(s); }
  int max_actions() const { return model_->max_actions(); }
  int num_end_states() const { return model_->num_end_states(); }
  EndIndex end_index(StateId s) const { return model_->end_index(s); }
  bool progress_encoded() const { return model_->progress_encoded(); }

  StateId step(StateId s, ActionId a, Rng& rng) const { return sample_transition(*model_, s, a, rng); }

 private:
  const EpisodicModel* model_;
};

}  // namespace qql
