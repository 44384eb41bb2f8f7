#include "qqlearn/oracle.hpp"

#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "qqlearn/solver.hpp"

namespace qql {

namespace {

struct DecisionPoint {
  int t;
  StateId s;
};

std::vector<DecisionPoint> decision_points(const EpisodicModel& model, PolicySpace space) {
  std::vector<DecisionPoint> points;
  if (space == PolicySpace::kFull) {
    for (int t = 1; t <= model.horizon(); ++t) {
      for (StateId s = 0; s < model.num_states(); ++s) {
        if (!model.is_end(s)) points.push_back({t, s});
      }
    }
    return points;
  }
  const auto layers = reachable_layers(model);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    for (StateId s : layers[k]) points.push_back({static_cast<int>(k + 1), s});
  }
  return points;
}

std::uint64_t saturating_product(const EpisodicModel& model, const std::vector<DecisionPoint>& points) {
  std::uint64_t count = 1;
  for (const auto& p : points) {
    const auto k = static_cast<std::uint64_t>(model.num_actions(p.s));
    if (k != 0 && count > std::numeric_limits<std::uint64_t>::max() / k) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= k;
  }
  return count;
}

}  // namespace

std::uint64_t count_policies(const EpisodicModel& model, PolicySpace space) {
  require_valid(model);
  return saturating_product(model, decision_points(model, space));
}

PolicyEnumerator::PolicyEnumerator(const EpisodicModel& model, PolicySpace space, std::uint64_t guard)
    : policy_(model.horizon(), model.num_states()) {
  require_valid(model);
  const auto points = decision_points(model, space);
  count_ = saturating_product(model, points);
  if (count_ > guard) {
    throw std::length_error(fmt::format("policy space has {} policies, above the enumeration guard of {}",
                                        count_ == std::numeric_limits<std::uint64_t>::max()
                                            ? std::string("more than 1.8e19")
                                            : std::to_string(count_),
                                        guard));
  }
  for (const auto& p : points) {
    points_.push_back({p.t, p.s, model.num_actions(p.s)});
    policy_.set(p.t, p.s, 0);
  }
  digits_.assign(points_.size(), 0);
}

bool PolicyEnumerator::next() {
  if (done_) return false;
  if (!started_) {
    started_ = true;
    return true;
  }
  // Odometer with the last decision point as the fastest digit.
  for (std::size_t k = points_.size(); k-- > 0;) {
    auto& p = points_[k];
    if (++digits_[k] < p.num_actions) {
      policy_.set(p.t, p.s, digits_[k]);
      return true;
    }
    digits_[k] = 0;
    policy_.set(p.t, p.s, 0);
  }
  done_ = true;
  return false;
}

std::vector<BestQuantile> brute_force_best_quantiles(const EpisodicModel& model, std::span<const double> taus,
                                                     std::span<const Objective> objectives) {
  std::vector<Tau> levels;
  levels.reserve(taus.size());
  for (double t : taus) levels.emplace_back(t);

  std::vector<BestQuantile> best(taus.size() * objectives.size());
  PolicyEnumerator policies(model);
  while (policies.next()) {
    const auto dist = exact_end_distribution(model, policies.current());
    for (std::size_t j = 0; j < objectives.size(); ++j) {
      for (std::size_t k = 0; k < levels.size(); ++k) {
        const EndIndex q = objectives[j] == Objective::kUpper ? upper_quantile(dist, levels[k], kComputedSlack)
                                                              : lower_quantile(dist, levels[k], kComputedSlack);
        auto& slot = best[j * levels.size() + k];
        if (q > slot.quantile) {
          slot.quantile = q;
          slot.policy = policies.current();
        }
      }
    }
  }
  return best;
}

BestQuantile brute_force_best_quantile(const EpisodicModel& model, Tau tau, Objective objective) {
  const double taus[] = {tau.value()};
  const Objective objectives[] = {objective};
  return brute_force_best_quantiles(model, taus, objectives).front();
}

OracleReport check_envelope_equivalence(const EpisodicModel& model, std::span<const double> taus) {
  constexpr Objective kObjectives[] = {Objective::kUpper, Objective::kLower};
  const auto best = brute_force_best_quantiles(model, taus, kObjectives);

  OracleReport report;
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const Tau tau(taus[k]);
      const EndIndex envelope = kObjectives[j] == Objective::kUpper ? optimal_upper_quantile(model, tau)
                                                                    : optimal_lower_quantile(model, tau);
      const EndIndex brute = best[j * taus.size() + k].quantile;
      ++report.cases;
      if (brute == envelope) {
        ++report.agreements;
      } else {
        report.mismatches.push_back({taus[k], kObjectives[j], brute, envelope});
      }
    }
  }
  return report;
}

}  // namespace qql
