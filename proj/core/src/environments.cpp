#include "qqlearn/environments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace qql {

namespace {

constexpr unsigned kAllLifelines = (1U << kWwtbamLifelines) - 1;

std::string format_amount(std::int64_t amount) { return fmt::format("${}", amount); }

// Bits of the lifelines the config actually provides.
unsigned provided_lifelines(const WwtbamConfig& config) {
  return (1U << config.lifelines.size()) - 1;
}

std::string mask_label(const WwtbamConfig& config, unsigned mask) {
  std::string out;
  for (std::size_t l = 0; l < config.lifelines.size(); ++l) {
    if (!(mask & (1U << l))) continue;
    if (!out.empty()) out += ",";
    out += config.lifelines[static_cast<std::size_t>(l)].name;
  }
  return out;
}

}  // namespace

WwtbamConfig WwtbamConfig::standard() {
  WwtbamConfig config;
  const int q_count = config.num_questions;
  for (int q = 1; q <= q_count; ++q) {
    config.payouts.push_back(100LL << (q - 1));
    config.base_prob.push_back(0.95 - 0.60 * static_cast<double>(q - 1) / static_cast<double>(q_count - 1));
  }
  config.guarantee_questions = {5, 10};
  const std::pair<const char*, double> lifelines[] = {{"50:50", 0.5}, {"audience", 0.3}, {"phone", 0.2}};
  for (const auto& [name, share] : lifelines) {
    Lifeline lifeline{name, {}};
    for (double p : config.base_prob) lifeline.boost.push_back(share * (1.0 - p));
    config.lifelines.push_back(std::move(lifeline));
  }
  return config;
}

std::vector<std::string> validate_wwtbam_config(const WwtbamConfig& config) {
  std::vector<std::string> errors;
  const int q_count = config.num_questions;
  if (q_count < 1) {
    errors.push_back(fmt::format("questions: must be at least 1, got {}", q_count));
    return errors;
  }
  const auto expected = static_cast<std::size_t>(q_count);
  if (config.payouts.size() != expected) {
    errors.push_back(fmt::format("payouts: expected {} entries, got {}", q_count, config.payouts.size()));
  } else {
    if (config.payouts.front() < 0) errors.push_back("payouts[0]: must be non-negative");
    for (std::size_t k = 1; k < config.payouts.size(); ++k) {
      if (config.payouts[k] <= config.payouts[k - 1]) {
        errors.push_back(fmt::format("payouts[{}]: ladder must be strictly increasing ({} after {})", k,
                                     config.payouts[k], config.payouts[k - 1]));
      }
    }
  }
  std::set<int> seen;
  for (int g : config.guarantee_questions) {
    if (g < 1 || g > q_count) errors.push_back(fmt::format("guarantees: question {} outside 1..{}", g, q_count));
    if (!seen.insert(g).second) errors.push_back(fmt::format("guarantees: question {} listed twice", g));
  }
  if (config.base_prob.size() != expected) {
    errors.push_back(fmt::format("base_prob: expected {} entries, got {}", q_count, config.base_prob.size()));
  } else {
    for (std::size_t k = 0; k < expected; ++k) {
      const double p = config.base_prob[k];
      if (!(p > 0.0 && p <= 1.0)) errors.push_back(fmt::format("base_prob[{}]: {} outside (0, 1]", k, p));
    }
  }
  if (config.lifelines.size() > static_cast<std::size_t>(kWwtbamLifelines)) {
    errors.push_back(fmt::format("lifelines: at most {} lifelines, got {}", kWwtbamLifelines, config.lifelines.size()));
  } else {
    for (std::size_t l = 0; l < config.lifelines.size(); ++l) {
      const auto& boost = config.lifelines[l].boost;
      if (boost.size() != expected) {
        errors.push_back(fmt::format("lifelines[{}].boost: expected {} entries, got {}", l, q_count, boost.size()));
        continue;
      }
      for (std::size_t k = 0; k < expected; ++k) {
        if (!(boost[k] >= 0.0 && std::isfinite(boost[k]))) {
          errors.push_back(fmt::format("lifelines[{}].boost[{}]: {} must be a finite non-negative number", l, k,
                                       boost[k]));
        }
      }
    }
  }
  return errors;
}

EndIndex WwtbamEndStates::index_of(std::int64_t amount) const {
  const auto it = std::lower_bound(payouts.begin(), payouts.end(), amount);
  if (it == payouts.end() || *it != amount) {
    throw std::out_of_range(fmt::format("no end state pays {}", amount));
  }
  return static_cast<EndIndex>(it - payouts.begin() + 1);
}

EndStateSet WwtbamEndStates::labels() const {
  std::vector<std::string> labels;
  labels.reserve(payouts.size());
  for (auto amount : payouts) labels.push_back(format_amount(amount));
  return EndStateSet(std::move(labels));
}

WwtbamEndStates wwtbam_end_states(const WwtbamConfig& config) {
  std::vector<std::int64_t> amounts{0};
  for (int q = 1; q <= config.num_questions; ++q) {
    amounts.push_back(wwtbam_quit_payout(config, q));
    amounts.push_back(wwtbam_failure_payout(config, q));
  }
  amounts.push_back(config.payouts.back());
  std::sort(amounts.begin(), amounts.end());
  amounts.erase(std::unique(amounts.begin(), amounts.end()), amounts.end());
  return WwtbamEndStates{std::move(amounts)};
}

std::int64_t wwtbam_quit_payout(const WwtbamConfig& config, int q) {
  return q <= 1 ? 0 : config.payouts.at(static_cast<std::size_t>(q - 2));
}

std::int64_t wwtbam_failure_payout(const WwtbamConfig& config, int q) {
  int best = 0;
  for (int g : config.guarantee_questions) {
    if (g < q) best = std::max(best, g);
  }
  return best == 0 ? 0 : config.payouts.at(static_cast<std::size_t>(best - 1));
}

double wwtbam_success_probability(const WwtbamConfig& config, int q, unsigned used) {
  const auto k = static_cast<std::size_t>(q - 1);
  double p = config.base_prob.at(k);
  for (std::size_t l = 0; l < config.lifelines.size(); ++l) {
    if (used & (1U << l)) p += config.lifelines[l].boost.at(k);
  }
  return std::min(1.0, p);
}

StateId wwtbam_state(int q, unsigned mask) {
  return static_cast<StateId>((q - 1) * (1 << kWwtbamLifelines) + static_cast<int>(mask));
}

EpisodicModel build_wwtbam(const WwtbamConfig& config) {
  if (auto errors = validate_wwtbam_config(config); !errors.empty()) {
    std::string message = "invalid game config:";
    for (const auto& e : errors) message += "\n  " + e;
    throw ModelError(message);
  }

  const int q_count = config.num_questions;
  const auto ends = wwtbam_end_states(config);
  EpisodicModel model;
  for (int q = 1; q <= q_count; ++q) {
    for (unsigned mask = 0; mask <= kAllLifelines; ++mask) {
      model.add_state(fmt::format("Q{} [{}]", q, mask_label(config, mask)));
    }
  }
  std::vector<StateId> end_ids;
  for (auto amount : ends.payouts) end_ids.push_back(model.add_state(format_amount(amount)));
  const auto end_of = [&](std::int64_t amount) { return end_ids[static_cast<std::size_t>(ends.index_of(amount) - 1)]; };

  for (int q = 1; q <= q_count; ++q) {
    for (unsigned mask = 0; mask <= kAllLifelines; ++mask) {
      const StateId s = wwtbam_state(q, mask);
      // Submasks of `mask` in increasing numeric order; 0 is a plain answer.
      for (unsigned used = 0; used <= mask; ++used) {
        if ((used & ~(mask & provided_lifelines(config))) != 0) continue;
        if (config.single_lifeline_per_question && std::popcount(used) > 1) continue;
        const std::string label = used == 0 ? "answer" : "answer+" + mask_label(config, used);
        const ActionId a = model.add_action(s, label);
        const double p = wwtbam_success_probability(config, q, used);
        const StateId success = q == q_count ? end_of(config.payouts.back()) : wwtbam_state(q + 1, mask & ~used);
        model.add_transition(s, a, success, p);
        if (p < 1.0) model.add_transition(s, a, end_of(wwtbam_failure_payout(config, q)), 1.0 - p);
      }
      if (q > 1 || config.allow_quit_at_first) {
        const ActionId quit = model.add_action(s, "quit");
        model.add_transition(s, quit, end_of(wwtbam_quit_payout(config, q)), 1.0);
      }
    }
  }
  model.set_initial(wwtbam_state(1, provided_lifelines(config)));
  model.set_horizon(q_count);
  model.set_end_states(end_ids, ends.labels().labels());
  model.set_progress_encoded(true);
  return model;
}

std::pair<EpisodicModel, Policy> build_example1() {
  EpisodicModel model;
  const StateId s0 = model.add_state("s0");
  const StateId g1 = model.add_state("g1");
  const StateId g2 = model.add_state("g2");
  const StateId g3 = model.add_state("g3");
  const ActionId a = model.add_action(s0, "play");
  model.add_transition(s0, a, g1, 0.5);
  model.add_transition(s0, a, g2, 0.2);
  model.add_transition(s0, a, g3, 0.3);
  model.set_initial(s0);
  model.set_horizon(1);
  model.set_end_states({g1, g2, g3});
  Policy policy = Policy::stationary(1, {a, Policy::kUndefined, Policy::kUndefined, Policy::kUndefined});
  return {std::move(model), std::move(policy)};
}

EpisodicModel build_two_action_toy() {
  EpisodicModel model;
  const StateId s0 = model.add_state("s0");
  const StateId g1 = model.add_state("g1");
  const StateId g2 = model.add_state("g2");
  const ActionId a1 = model.add_action(s0, "a1");
  const ActionId a2 = model.add_action(s0, "a2");
  model.add_transition(s0, a1, g1, 1.0);
  model.add_transition(s0, a2, g2, 1.0);
  model.set_initial(s0);
  model.set_horizon(1);
  model.set_end_states({g1, g2});
  return model;
}

namespace {

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::size_t>(hi - lo + 1)));
}

std::vector<double> random_simplex(Rng& rng, std::size_t k, int grid) {
  std::vector<double> probs(k);
  if (grid > 0 && static_cast<std::size_t>(grid) >= k) {
    std::vector<int> units(k, 1);
    for (int left = grid - static_cast<int>(k); left > 0; --left) ++units[rng.below(k)];
    for (std::size_t j = 0; j < k; ++j) probs[j] = static_cast<double>(units[j]) / static_cast<double>(grid);
    return probs;
  }
  // Normalized exponential draws: a flat Dirichlet sample.
  double total = 0.0;
  for (auto& p : probs) {
    p = -std::log1p(-rng.uniform()) + 1e-3;
    total += p;
  }
  double head = 0.0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    probs[j] /= total;
    head += probs[j];
  }
  probs.back() = 1.0 - head;
  return probs;
}

}  // namespace

EpisodicModel random_small_mdp(Rng& rng, const RandomMdpLimits& limits) {
  if (limits.max_decision_states < 1 || limits.max_actions < 1 || limits.max_horizon < 1 ||
      limits.max_end_states < 1) {
    throw std::invalid_argument("random MDP limits must all be positive");
  }
  const int horizon = uniform_int(rng, 1, limits.max_horizon);
  const int n_end = uniform_int(rng, 1, limits.max_end_states);
  const int n_decision =
      horizon == 1 ? 1 : uniform_int(rng, std::min(horizon, limits.max_decision_states), limits.max_decision_states);

  // Layer of each decision state: s0 alone in layer 1, every later layer
  // non-empty while states last.
  std::vector<int> layer(static_cast<std::size_t>(n_decision), 1);
  for (int s = 1; s < n_decision; ++s) {
    layer[static_cast<std::size_t>(s)] = s < horizon ? s + 1 : uniform_int(rng, 2, horizon);
  }

  EpisodicModel model;
  for (int s = 0; s < n_decision; ++s) model.add_state(fmt::format("s{}", s));
  std::vector<StateId> ends;
  for (int i = 1; i <= n_end; ++i) ends.push_back(model.add_state(fmt::format("g{}", i)));

  for (StateId s = 0; s < n_decision; ++s) {
    std::vector<StateId> candidates = ends;
    for (StateId s2 = 0; s2 < n_decision; ++s2) {
      if (layer[static_cast<std::size_t>(s2)] > layer[static_cast<std::size_t>(s)]) candidates.push_back(s2);
    }
    const int n_actions = uniform_int(rng, 1, limits.max_actions);
    for (int k = 0; k < n_actions; ++k) {
      const ActionId a = model.add_action(s, fmt::format("a{}", k));
      // Partial Fisher-Yates to pick a random support.
      auto pool = candidates;
      const auto support = static_cast<std::size_t>(uniform_int(rng, 1, std::min<int>(3, static_cast<int>(pool.size()))));
      for (std::size_t j = 0; j < support; ++j) {
        std::swap(pool[j], pool[j + rng.below(pool.size() - j)]);
      }
      const auto probs = random_simplex(rng, support, limits.probability_grid);
      for (std::size_t j = 0; j < support; ++j) model.add_transition(s, a, pool[j], probs[j]);
    }
  }
  model.set_initial(0);
  model.set_horizon(horizon);
  model.set_end_states(ends);
  return model;
}

std::uint64_t random_mdp_policy_bound(const RandomMdpLimits& limits) {
  const auto points = 1 + static_cast<std::uint64_t>(std::max(limits.max_decision_states - 1, 0)) *
                              static_cast<std::uint64_t>(std::max(limits.max_horizon - 1, 0));
  const auto base = static_cast<std::uint64_t>(std::max(limits.max_actions, 1));
  std::uint64_t count = 1;
  for (std::uint64_t k = 0; k < points; ++k) {
    if (count > std::numeric_limits<std::uint64_t>::max() / base) return std::numeric_limits<std::uint64_t>::max();
    count *= base;
  }
  return count;
}

}  // namespace qql
