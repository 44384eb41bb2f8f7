#include "qqlearn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace qql {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kDistributionTolerance = 1e-9;

std::string state_name(const EpisodicModel& model, StateId s) {
  const auto& label = model.state_label(s);
  return label.empty() ? fmt::format("state {}", s) : fmt::format("state {} ({})", s, label);
}

}  // namespace

StateId EpisodicModel::add_state(std::string label) {
  states_.push_back(StateData{std::move(label), {}});
  end_of_state_.push_back(0);
  return static_cast<StateId>(states_.size() - 1);
}

ActionId EpisodicModel::add_action(StateId s, std::string label) {
  if (s < 0 || s >= num_states()) {
    throw ModelError(fmt::format("add_action: no state {}", s));
  }
  auto& actions = states_[static_cast<std::size_t>(s)].actions;
  actions.push_back(ActionData{std::move(label), {}});
  return static_cast<ActionId>(actions.size() - 1);
}

void EpisodicModel::add_transition(StateId s, ActionId a, StateId next, double prob) {
  if (s < 0 || s >= num_states()) {
    throw ModelError(fmt::format("add_transition: no state {}", s));
  }
  auto& actions = states_[static_cast<std::size_t>(s)].actions;
  if (a < 0 || a >= static_cast<ActionId>(actions.size())) {
    throw ModelError(fmt::format("add_transition: no action {} in state {}", a, s));
  }
  // Out-of-range targets are kept and reported by validate_model.
  actions[static_cast<std::size_t>(a)].transitions.push_back(Transition{next, prob});
}

void EpisodicModel::set_end_states(std::vector<StateId> states, std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != states.size()) {
    throw ModelError("set_end_states: label count differs from end-state count");
  }
  std::fill(end_of_state_.begin(), end_of_state_.end(), 0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const StateId s = states[i];
    if (s < 0 || s >= num_states()) {
      throw ModelError(fmt::format("set_end_states: no state {}", s));
    }
    if (end_of_state_[static_cast<std::size_t>(s)] != 0) {
      throw ModelError(fmt::format("set_end_states: state {} listed twice", s));
    }
    end_of_state_[static_cast<std::size_t>(s)] = static_cast<EndIndex>(i + 1);
  }
  if (labels.empty()) {
    labels.reserve(states.size());
    for (StateId s : states) {
      const auto& label = state_label(s);
      labels.push_back(label.empty() ? fmt::format("g{}", labels.size() + 1) : label);
    }
  }
  end_state_ids_ = std::move(states);
  end_states_ = EndStateSet(std::move(labels));
}

int EpisodicModel::max_actions() const {
  int result = 0;
  for (const auto& st : states_) {
    result = std::max(result, static_cast<int>(st.actions.size()));
  }
  return result;
}

const EpisodicModel::StateData& EpisodicModel::state(StateId s) const {
  if (s < 0 || s >= num_states()) {
    throw ModelError(fmt::format("no state {}", s));
  }
  return states_[static_cast<std::size_t>(s)];
}

std::span<const Transition> EpisodicModel::transitions(StateId s, ActionId a) const {
  const auto& st = state(s);
  if (a < 0 || a >= static_cast<ActionId>(st.actions.size())) {
    throw ModelError(fmt::format("action {} is not admissible in state {}", a, s));
  }
  return st.actions[static_cast<std::size_t>(a)].transitions;
}

const std::string& EpisodicModel::action_label(StateId s, ActionId a) const {
  const auto& st = state(s);
  if (a < 0 || a >= static_cast<ActionId>(st.actions.size())) {
    throw ModelError(fmt::format("action {} is not admissible in state {}", a, s));
  }
  return st.actions[static_cast<std::size_t>(a)].label;
}

Policy::Policy(int horizon, int num_states)
    : horizon_(horizon),
      num_states_(num_states),
      table_(static_cast<std::size_t>(std::max(horizon, 0)) * static_cast<std::size_t>(std::max(num_states, 0)),
             kUndefined) {}

Policy Policy::stationary(int horizon, const std::vector<ActionId>& actions) {
  Policy policy(horizon, static_cast<int>(actions.size()));
  for (int t = 1; t <= horizon; ++t) {
    for (StateId s = 0; s < policy.num_states(); ++s) {
      policy.set(t, s, actions[static_cast<std::size_t>(s)]);
    }
  }
  return policy;
}

std::size_t Policy::offset(int t, StateId s) const {
  if (t < 1 || t > horizon_ || s < 0 || s >= num_states_) {
    throw std::out_of_range(fmt::format("policy has no decision rule for step {} state {}", t, s));
  }
  return static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(s);
}

ActionId Policy::at(int t, StateId s) const { return table_[offset(t, s)]; }

void Policy::set(int t, StateId s, ActionId a) { table_[offset(t, s)] = a; }

EndStateDistribution::EndStateDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw std::invalid_argument("end-state distribution must have at least one entry");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument(fmt::format("end-state probability {} is not a finite non-negative number", p));
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kDistributionTolerance) {
    throw std::invalid_argument(fmt::format("end-state distribution sums to {:.12g}, expected 1", total));
  }
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const auto& v : violations) {
    out += fmt::format("{}: {}\n", v.where, v.message);
  }
  return out;
}

std::vector<std::vector<StateId>> reachable_layers(const EpisodicModel& model) {
  const int n_states = model.num_states();
  std::vector<std::vector<StateId>> layers;
  std::vector<char> current(static_cast<std::size_t>(n_states), 0);
  if (model.initial() < 0 || model.initial() >= n_states || model.is_end(model.initial())) {
    return layers;
  }
  current[static_cast<std::size_t>(model.initial())] = 1;
  for (int t = 1; t <= model.horizon(); ++t) {
    std::vector<StateId> layer;
    std::vector<char> next(static_cast<std::size_t>(n_states), 0);
    for (StateId s = 0; s < n_states; ++s) {
      if (!current[static_cast<std::size_t>(s)]) continue;
      layer.push_back(s);
      for (ActionId a = 0; a < model.num_actions(s); ++a) {
        for (const auto& tr : model.transitions(s, a)) {
          if (tr.prob > 0.0 && tr.next >= 0 && tr.next < n_states && !model.is_end(tr.next)) {
            next[static_cast<std::size_t>(tr.next)] = 1;
          }
        }
      }
    }
    layers.push_back(std::move(layer));
    current = std::move(next);
  }
  return layers;
}

ValidationReport validate_model(const EpisodicModel& model) {
  ValidationReport report;
  auto add = [&report](ViolationKind kind, std::string where, std::string message) {
    report.violations.push_back(Violation{kind, std::move(where), std::move(message)});
  };

  const int n_states = model.num_states();
  if (n_states == 0) {
    add(ViolationKind::kStructure, "model", "model has no states");
    return report;
  }
  if (model.num_end_states() < 1) {
    add(ViolationKind::kStructure, "end_states", "at least one end state is required");
  }
  if (model.horizon() < 1) {
    add(ViolationKind::kHorizon, "horizon", fmt::format("horizon must be a positive integer, got {}", model.horizon()));
  }
  const StateId s0 = model.initial();
  bool initial_ok = true;
  if (s0 < 0 || s0 >= n_states) {
    add(ViolationKind::kInitialState, "initial", fmt::format("initial state {} does not exist", s0));
    initial_ok = false;
  } else if (model.is_end(s0)) {
    add(ViolationKind::kInitialState, "initial", "initial state must not be an end state");
    initial_ok = false;
  }

  bool rows_ok = true;
  for (StateId s = 0; s < n_states; ++s) {
    const int n_actions = model.num_actions(s);
    if (model.is_end(s)) {
      if (n_actions != 0) {
        add(ViolationKind::kEndStateOutgoing, state_name(model, s),
            "end states are absorbing and must not have actions or transitions");
        rows_ok = false;
      }
      continue;
    }
    if (n_actions == 0) {
      add(ViolationKind::kAction, state_name(model, s), "non-end state has no admissible action");
    }
    for (ActionId a = 0; a < n_actions; ++a) {
      const auto where = fmt::format("{}, action {}", state_name(model, s), a);
      double total = 0.0;
      bool entries_ok = true;
      for (const auto& tr : model.transitions(s, a)) {
        if (tr.next < 0 || tr.next >= n_states) {
          add(ViolationKind::kTransition, where, fmt::format("transition targets unknown state {}", tr.next));
          entries_ok = false;
        }
        if (!(tr.prob >= 0.0 && tr.prob <= 1.0)) {
          add(ViolationKind::kTransition, where, fmt::format("probability {} outside [0, 1]", tr.prob));
          entries_ok = false;
        }
        total += tr.prob;
      }
      if (!entries_ok) {
        rows_ok = false;
        continue;
      }
      if (std::abs(total - 1.0) > kRowTolerance) {
        add(ViolationKind::kNormalization, where, fmt::format("transition probabilities sum to {:.15g}, expected 1", total));
        rows_ok = false;
      }
    }
  }

  if (initial_ok && rows_ok && model.horizon() >= 1) {
    // Anything still non-end after T steps means some trajectory outlives the
    // horizon (a cycle, or a horizon that is too short).
    auto layers = reachable_layers(model);
    std::vector<char> pending(static_cast<std::size_t>(n_states), 0);
    for (StateId s : layers.back()) {
      for (ActionId a = 0; a < model.num_actions(s); ++a) {
        for (const auto& tr : model.transitions(s, a)) {
          if (tr.prob > 0.0 && !model.is_end(tr.next)) pending[static_cast<std::size_t>(tr.next)] = 1;
        }
      }
    }
    for (StateId s = 0; s < n_states; ++s) {
      if (pending[static_cast<std::size_t>(s)]) {
        add(ViolationKind::kTermination, state_name(model, s),
            fmt::format("non-end state is still reachable after the horizon of {} steps; no end state is "
                        "guaranteed within T",
                        model.horizon()));
      }
    }
  }
  return report;
}

void require_valid(const EpisodicModel& model) {
  auto report = validate_model(model);
  if (!report.ok()) {
    throw ModelError("invalid model:\n" + report.to_string());
  }
}

StateId sample_transition(const EpisodicModel& model, StateId s, ActionId a, Rng& rng) {
  if (model.is_end(s)) {
    throw ModelError(fmt::format("cannot act in end state {}", s));
  }
  const auto row = model.transitions(s, a);
  const double u = rng.uniform();
  double acc = 0.0;
  StateId last_positive = row.empty() ? s : row.front().next;
  for (const auto& tr : row) {
    if (tr.prob <= 0.0) continue;
    acc += tr.prob;
    last_positive = tr.next;
    if (u < acc) return tr.next;
  }
  // Only reachable through rounding when the row sums to slightly below 1.
  return last_positive;
}

Episode rollout(const EpisodicModel& model, const Policy& policy, Rng& rng) {
  Episode episode;
  StateId s = model.initial();
  for (int t = 1; t <= model.horizon(); ++t) {
    if (t > policy.horizon() || s >= policy.num_states()) {
      throw ModelError(fmt::format("policy undefined at step {} state {}", t, s));
    }
    const ActionId a = policy.at(t, s);
    if (a == Policy::kUndefined) {
      throw ModelError(fmt::format("policy undefined at step {} state {}", t, s));
    }
    episode.steps.push_back({s, a});
    s = sample_transition(model, s, a, rng);
    if (model.is_end(s)) {
      episode.terminal_state = s;
      episode.terminal = model.end_index(s);
      return episode;
    }
  }
  throw ModelError(fmt::format("episode did not reach an end state within {} steps", model.horizon()));
}

EndStateDistribution exact_end_distribution(const EpisodicModel& model, const Policy& policy) {
  const auto n_states = static_cast<std::size_t>(model.num_states());
  std::vector<double> mass(n_states, 0.0);
  std::vector<double> next(n_states, 0.0);
  std::vector<double> absorbed(static_cast<std::size_t>(model.num_end_states()), 0.0);
  mass[static_cast<std::size_t>(model.initial())] = 1.0;

  for (int t = 1; t <= model.horizon(); ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    bool any = false;
    for (StateId s = 0; s < static_cast<StateId>(n_states); ++s) {
      const double m = mass[static_cast<std::size_t>(s)];
      if (m == 0.0) continue;
      any = true;
      if (t > policy.horizon() || s >= policy.num_states() || policy.at(t, s) == Policy::kUndefined) {
        throw ModelError(fmt::format("policy undefined at reachable step {} state {}", t, s));
      }
      for (const auto& tr : model.transitions(s, policy.at(t, s))) {
        const EndIndex g = model.end_index(tr.next);
        if (g != 0) {
          absorbed[static_cast<std::size_t>(g - 1)] += m * tr.prob;
        } else {
          next[static_cast<std::size_t>(tr.next)] += m * tr.prob;
        }
      }
    }
    std::swap(mass, next);
    if (!any) break;
  }
  if (std::any_of(mass.begin(), mass.end(), [](double m) { return m > 0.0; })) {
    throw ModelError("probability mass remains outside end states after the horizon");
  }
  return EndStateDistribution(std::move(absorbed));
}

}  // namespace qql
