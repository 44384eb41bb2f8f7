#include <benchmark/benchmark.h>

#include <vector>

#include "qqlearn/environments.hpp"
#include "qqlearn/learning.hpp"
#include "qqlearn/model.hpp"
#include "qqlearn/oracle.hpp"
#include "qqlearn/solver.hpp"

namespace {

using namespace qql;

void BM_SolveThetaWwtbam(benchmark::State& state) {
  const auto game = build_wwtbam(WwtbamConfig::standard());
  for (auto _ : state) benchmark::DoNotOptimize(solve_theta(game, 5.06, Objective::kUpper).root_value());
}
BENCHMARK(BM_SolveThetaWwtbam);

void BM_EnvelopeWwtbam(benchmark::State& state) {
  const auto game = build_wwtbam(WwtbamConfig::standard());
  for (auto _ : state) benchmark::DoNotOptimize(optimal_decumulative(game).values.data());
}
BENCHMARK(BM_EnvelopeWwtbam)->Unit(benchmark::kMicrosecond);

void BM_ThresholdCrossingWwtbam(benchmark::State& state) {
  const auto game = build_wwtbam(WwtbamConfig::standard());
  for (auto _ : state) benchmark::DoNotOptimize(threshold_crossing(game, Tau(0.3)));
}
BENCHMARK(BM_ThresholdCrossingWwtbam)->Unit(benchmark::kMicrosecond);

// Learning steps per second on the game, trace disabled.
void BM_QqLearningThroughput(benchmark::State& state) {
  const auto game = build_wwtbam(WwtbamConfig::standard());
  const Simulator sim(game);
  LearningOptions options;
  options.steps = static_cast<std::uint64_t>(state.range(0));
  options.log_every = 0;
  for (auto _ : state) {
    Rng rng(1);
    benchmark::DoNotOptimize(qq_learning(sim, Tau(0.3), Schedules::standard(), options, rng).theta);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QqLearningThroughput)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_BruteForceRandomMdp(benchmark::State& state) {
  std::vector<EpisodicModel> models;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(derive_seed(1, k));
    models.push_back(random_small_mdp(rng));
  }
  const std::vector<double> taus{0.1, 0.3, 0.5, 0.7, 0.9};
  for (auto _ : state) {
    for (const auto& m : models) benchmark::DoNotOptimize(check_envelope_equivalence(m, taus).agreements);
  }
}
BENCHMARK(BM_BruteForceRandomMdp)->Unit(benchmark::kMillisecond);

void BM_BruteForceReducedGame(benchmark::State& state) {
  const auto standard = WwtbamConfig::standard();
  WwtbamConfig five;
  five.num_questions = 5;
  five.payouts.assign(standard.payouts.begin(), standard.payouts.begin() + 5);
  five.guarantee_questions = {5};
  five.base_prob.assign(standard.base_prob.begin(), standard.base_prob.begin() + 5);
  five.lifelines = {{"50:50", std::vector<double>(standard.lifelines[0].boost.begin(),
                                                  standard.lifelines[0].boost.begin() + 5)}};
  const auto game = build_wwtbam(five);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_best_quantile(game, Tau(0.3), Objective::kUpper).quantile);
}
BENCHMARK(BM_BruteForceReducedGame)->Unit(benchmark::kMillisecond);

void BM_Rollout(benchmark::State& state) {
  const auto game = build_wwtbam(WwtbamConfig::standard());
  const auto policy = solve_theta(game, 5.0, Objective::kUpper).greedy();
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(game, policy, rng).terminal_state);
}
BENCHMARK(BM_Rollout);

}  // namespace

BENCHMARK_MAIN();
