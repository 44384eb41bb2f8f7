#include "qqlearn/experiment.hpp"

#include <future>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qqlearn/environments.hpp"
#include "qqlearn/plot.hpp"
#include "qqlearn/quantile.hpp"
#include "qqlearn/solver.hpp"

namespace qql {

LoadedEnvironment load_environment(const std::string& spec) {
  if (spec == "wwtbam") return {build_wwtbam(WwtbamConfig::standard()), "wwtbam", true};
  if (spec == "two-action-toy") return {build_two_action_toy(), "two-action-toy", true};
  if (spec == "example1") return {build_example1().first, "example1", true};

  auto document = load_environment_document(spec);
  if (auto* config = std::get_if<WwtbamConfig>(&document)) {
    return {build_wwtbam(*config), spec, true};
  }
  return {std::move(std::get<EpisodicModel>(document)), spec, true};
}

TrainingRun run_training(const ExperimentConfig& config, const LoadedEnvironment& env, std::uint64_t job) {
  if (auto errors = validate_experiment_config(config); !errors.empty()) {
    std::string message = "invalid experiment config:";
    for (const auto& e : errors) message += "\n  " + e;
    throw std::invalid_argument(message);
  }
  require_valid(env.model);

  LearningOptions options;
  options.objective = config.objective;
  options.steps = config.steps;
  options.log_every = config.log_every;
  options.theta0 = config.theta0;
  options.theta_warmup = config.theta_warmup;
  options.layering = config.layering;

  Rng rng(derive_seed(config.seed, job));
  const Simulator simulator(env.model);
  const Tau tau(config.tau);

  TrainingRun run{config, job, env.name, env.model.end_states(),
                  qq_learning(simulator, tau, make_schedules(config), options, rng), 0, std::nullopt};
  const int n = env.model.num_end_states();
  run.learned_quantile = quantile_from_theta(run.result.theta, n);

  if (env.full_model) {
    ExactComparison exact;
    exact.optimal_quantile = config.objective == Objective::kUpper ? optimal_upper_quantile(env.model, tau)
                                                                   : optimal_lower_quantile(env.model, tau);
    exact.reference_theta = threshold_crossing(env.model, tau, config.objective);
    const auto dist = exact_end_distribution(env.model, greedy_policy(run.result.q, env.model.horizon()));
    exact.greedy_distribution.assign(dist.probs().begin(), dist.probs().end());
    exact.greedy_quantile = config.objective == Objective::kUpper ? upper_quantile(dist, tau, kComputedSlack)
                                                                  : lower_quantile(dist, tau, kComputedSlack);
    run.exact = std::move(exact);
  }
  return run;
}

TrainingRun run_training(const ExperimentConfig& config, std::uint64_t job) {
  return run_training(config, load_environment(config.environment), job);
}

std::string training_summary(const TrainingRun& run) {
  const auto& c = run.config;
  const auto& r = run.result;
  const auto label = [&](EndIndex i) { return run.end_labels.label(i); };
  std::string out;
  out += fmt::format("environment: {}\n", run.environment_name);
  out += fmt::format("objective: {}\n", to_string(c.objective));
  out += fmt::format("tau: {}\n", c.tau);
  out += fmt::format("steps: {}\n", c.steps);
  out += fmt::format("seed: {}\n", c.seed);
  out += fmt::format("job: {}\n", run.job);
  out += fmt::format("alpha_exponent: {}\n", c.alpha_exponent);
  out += fmt::format("epsilon: {}{}\n", c.epsilon, c.decaying_epsilon ? " (decaying floor)" : "");
  out += fmt::format("final_theta: {}\n", r.theta);
  out += fmt::format("quantile_from_theta: {} ({})\n", run.learned_quantile, label(run.learned_quantile));
  out += fmt::format("trailing_v_estimate_mean: {}\n", r.trailing_v_mean);
  out += fmt::format("final_v_estimate: {}\n", r.final_v);
  out += fmt::format("final_score: {}\n", r.final_score);
  out += fmt::format("episodes: {}\n", r.episodes);
  out += fmt::format("theta_clamp_events: {}\n", r.clamp_events);
  if (run.exact) {
    const auto& e = *run.exact;
    out += fmt::format("exact_optimal_quantile: {} ({})\n", e.optimal_quantile, label(e.optimal_quantile));
    out += fmt::format("exact_reference_theta: {}\n", e.reference_theta);
    out += fmt::format("greedy_policy_quantile: {} ({})\n", e.greedy_quantile, label(e.greedy_quantile));
    out += fmt::format("greedy_policy_distribution: {}\n", fmt::join(e.greedy_distribution, " "));
    out += fmt::format("learned_matches_exact: {}\n", run.learned_quantile == e.optimal_quantile ? "yes" : "no");
  }
  return out;
}

void write_training_outputs(const TrainingRun& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& trace = run.result.trace;
  write_text_file(dir / "trace.csv", trace_csv(trace));
  write_text_file(dir / "summary.txt", training_summary(run));

  std::vector<double> n(trace.size());
  std::vector<double> v(trace.size());
  std::vector<double> score(trace.size());
  std::vector<double> theta(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    n[k] = static_cast<double>(trace[k].n);
    v[k] = trace[k].v_estimate;
    score[k] = trace[k].score;
    theta[k] = trace[k].theta;
  }
  const double level = run.config.objective == Objective::kUpper ? 1.0 - run.config.tau : -run.config.tau;
  const auto level_label = fmt::format("target {:.3g}", level);
  write_text_file(dir / "v_estimate.svg",
                  line_plot_svg({"Root value estimate", "iteration n", "V_theta(s0)", n, v, level, level_label}));
  write_text_file(dir / "score.svg", line_plot_svg({"Score of the played policy", "iteration n", "score", n, score,
                                                    level, level_label}));
  std::optional<double> theta_ref;
  std::string theta_ref_label;
  if (run.exact) {
    theta_ref = run.exact->reference_theta;
    theta_ref_label = fmt::format("exact crossing {:.4g}", *theta_ref);
  }
  write_text_file(dir / "theta.svg",
                  line_plot_svg({"Quantile threshold", "iteration n", "theta", n, theta, theta_ref, theta_ref_label}));
}

std::vector<TrainingRun> run_sweep(const ExperimentConfig& config, std::uint64_t jobs) {
  const LoadedEnvironment env = load_environment(config.environment);
  std::vector<std::future<TrainingRun>> futures;
  futures.reserve(jobs);
  for (std::uint64_t j = 0; j < jobs; ++j) {
    futures.push_back(std::async(std::launch::async, [&config, &env, j] { return run_training(config, env, j); }));
  }
  std::vector<TrainingRun> runs;
  runs.reserve(jobs);
  for (auto& f : futures) runs.push_back(f.get());
  return runs;
}

std::string sweep_report(const std::vector<TrainingRun>& runs) {
  std::string out = "job,final_theta,quantile_from_theta,exact_optimal_quantile,trailing_v_mean,final_score\n";
  std::size_t matches = 0;
  for (const auto& run : runs) {
    const EndIndex exact = run.exact ? run.exact->optimal_quantile : 0;
    if (run.exact && exact == run.learned_quantile) ++matches;
    out += fmt::format("{},{},{},{},{},{}\n", run.job, run.result.theta, run.learned_quantile, exact,
                       run.result.trailing_v_mean, run.result.final_score);
  }
  out += fmt::format("# learned quantile matches exact optimum in {}/{} jobs\n", matches, runs.size());
  return out;
}

}  // namespace qql
