#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qqlearn/model.hpp"

namespace qql::testing {

inline std::filesystem::path source_path(const std::string& relative) {
  return std::filesystem::path(QQLEARN_SOURCE_DIR) / relative;
}

// s0 -a-> end state k of n with certainty.
inline EpisodicModel deterministic_chain(int n, int k) {
  EpisodicModel m;
  const StateId s0 = m.add_state("s0");
  std::vector<StateId> ends;
  for (int i = 1; i <= n; ++i) ends.push_back(m.add_state("g" + std::to_string(i)));
  m.add_action(s0, "go");
  m.add_transition(s0, 0, ends[static_cast<std::size_t>(k - 1)], 1.0);
  m.set_initial(s0);
  m.set_horizon(1);
  m.set_end_states(ends);
  return m;
}

// One action reaching the end states with the given probabilities.
inline EpisodicModel single_lottery(const std::vector<double>& probs) {
  EpisodicModel m;
  const StateId s0 = m.add_state("s0");
  std::vector<StateId> ends;
  for (std::size_t i = 0; i < probs.size(); ++i) ends.push_back(m.add_state("g" + std::to_string(i + 1)));
  m.add_action(s0, "play");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) m.add_transition(s0, 0, ends[i], probs[i]);
  }
  m.set_initial(s0);
  m.set_horizon(1);
  m.set_end_states(ends);
  return m;
}

// Two decision steps, two actions each: x reaches y or z, y/z end in g1/g2.
inline EpisodicModel two_step_model() {
  EpisodicModel m;
  const StateId x = m.add_state("x");
  const StateId y = m.add_state("y");
  const StateId g1 = m.add_state("g1");
  const StateId g2 = m.add_state("g2");
  m.add_action(x, "safe");
  m.add_action(x, "risky");
  m.add_transition(x, 0, y, 1.0);
  m.add_transition(x, 1, y, 0.5);
  m.add_transition(x, 1, g2, 0.5);
  m.add_action(y, "low");
  m.add_action(y, "high");
  m.add_transition(y, 0, g1, 1.0);
  m.add_transition(y, 1, g1, 0.4);
  m.add_transition(y, 1, g2, 0.6);
  m.set_initial(x);
  m.set_horizon(2);
  m.set_end_states({g1, g2});
  return m;
}

}  // namespace qql::testing
