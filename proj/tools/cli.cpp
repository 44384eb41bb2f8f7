#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "json.hpp"
#include "qqlearn/environments.hpp"
#include "qqlearn/experiment.hpp"
#include "qqlearn/io.hpp"
#include "qqlearn/model.hpp"
#include "qqlearn/oracle.hpp"
#include "qqlearn/quantile.hpp"
#include "qqlearn/solver.hpp"

namespace qql::cli {
namespace {

namespace fs = std::filesystem;

// Bad flag values or combinations detected after CLI11 accepted the syntax.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prints the report and, when requested, also writes it to a file.
void emit(std::ostream& out, const std::string& report, const std::string& out_path) {
  out << report;
  if (!out_path.empty()) write_text_file(out_path, report);
}

std::string quantile_text(const EpisodicModel& model, QuantileValue q) {
  const auto& labels = model.end_states();
  if (q.split()) return fmt::format("split({}, {})", labels.label(q.lower), labels.label(q.upper));
  return labels.label(q.lower);
}

// ---------------------------------------------------------------------------
// validate

enum class DocumentKind { kModel, kGame, kExperiment };

DocumentKind sniff_document(const fs::path& path) {
  // Malformed files are left to the real loaders, which report line numbers.
  const auto doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (!doc.is_object() || doc.contains("states")) return DocumentKind::kModel;
  if (doc.contains("questions")) return DocumentKind::kGame;
  return DocumentKind::kExperiment;
}

std::string describe_model(const EpisodicModel& model) {
  int decision = 0;
  for (StateId s = 0; s < model.num_states(); ++s) decision += model.is_end(s) ? 0 : 1;
  return fmt::format("{} states ({} decision, {} end), horizon {}\n", model.num_states(), decision,
                     model.num_end_states(), model.horizon());
}

int validate_model_report(const EpisodicModel& model, std::string& report) {
  const auto result = validate_model(model);
  if (result.ok()) {
    report += describe_model(model);
    report += "valid\n";
    return kExitOk;
  }
  report += result.to_string();
  report += fmt::format("invalid: {} violation(s)\n", result.violations.size());
  return kExitFailure;
}

int cmd_validate(const std::string& file, const std::string& out_path, std::ostream& out) {
  std::string report = fmt::format("{}: ", file);
  int status = kExitOk;
  switch (sniff_document(file)) {
    case DocumentKind::kModel:
      report += "model file, ";
      status = validate_model_report(load_model_file(file), report);
      break;
    case DocumentKind::kGame: {
      report += "game config, ";
      const auto config = load_wwtbam_config(file);
      if (const auto problems = validate_wwtbam_config(config); !problems.empty()) {
        report += "\n";
        for (const auto& p : problems) report += p + "\n";
        report += fmt::format("invalid: {} violation(s)\n", problems.size());
        status = kExitFailure;
      } else {
        status = validate_model_report(build_wwtbam(config), report);
      }
      break;
    }
    case DocumentKind::kExperiment: {
      report += "experiment config\n";
      const auto config = load_experiment_config(file);
      auto problems = validate_experiment_config(config);
      if (const auto check = check_timescale(make_schedules(config)); !check.pass) {
        problems.push_back(check.diagnostic);
      }
      if (!problems.empty()) {
        for (const auto& p : problems) report += p + "\n";
        report += fmt::format("invalid: {} violation(s)\n", problems.size());
        status = kExitFailure;
        break;
      }
      const auto env = load_environment(config.environment);
      report += fmt::format("environment {}: ", env.name);
      status = validate_model_report(env.model, report);
      break;
    }
  }
  emit(out, report, out_path);
  return status;
}

// ---------------------------------------------------------------------------
// solve

Policy optimal_policy(const EpisodicModel& model, Objective objective, EndIndex k) {
  return solve_theta(model, static_cast<double>(k), objective).greedy();
}

EndIndex optimal_quantile(const EpisodicModel& model, Objective objective, Tau tau) {
  return objective == Objective::kUpper ? optimal_upper_quantile(model, tau) : optimal_lower_quantile(model, tau);
}

void require_quantile_level(Objective objective, double tau) {
  if (objective == Objective::kUpper && tau >= 1.0) throw UsageError("the upper quantile needs tau < 1");
  if (objective == Objective::kLower && tau <= 0.0) throw UsageError("the lower quantile needs tau > 0");
}

int cmd_solve(const std::string& spec, double tau_value, Objective objective, const std::string& out_path,
              std::ostream& out) {
  require_quantile_level(objective, tau_value);
  const auto env = load_environment(spec);
  const auto& model = env.model;
  require_valid(model);
  const Tau tau(tau_value);

  const auto lower = optimal_cumulative(model);
  const auto upper = optimal_decumulative(model);
  std::string report = fmt::format("environment: {}\n", env.name);
  report += fmt::format("objective: {}\ntau: {}\n\n", to_string(objective), tau_value);
  report += fmt::format("{:>4}  {:<16} {:>12} {:>12}\n", "i", "end state", "F*(g_i)", "G*(g_i)");
  for (EndIndex i = 1; i <= model.num_end_states(); ++i) {
    report += fmt::format("{:>4}  {:<16} {:>12.6f} {:>12.6f}\n", i, model.end_states().label(i), lower.at(i),
                          upper.at(i));
  }

  const EndIndex k = optimal_quantile(model, objective, tau);
  report += fmt::format("\noptimal {} quantile: {} (index {})\n", to_string(objective), model.end_states().label(k), k);

  const Policy policy = optimal_policy(model, objective, k);
  const auto dist = exact_end_distribution(model, policy);
  report += fmt::format("greedy policy at theta = {}:\n", k);
  const auto layers = reachable_layers(model);
  for (std::size_t t = 0; t < layers.size(); ++t) {
    for (StateId s : layers[t]) {
      const int step = static_cast<int>(t) + 1;
      report += fmt::format("  t={} {} -> {}\n", step, model.state_label(s),
                            model.action_label(s, policy.at(step, s)));
    }
  }
  report += fmt::format("policy quantile: {}\n", quantile_text(model, quantile(dist, tau, kComputedSlack)));
  emit(out, report, out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainFlags {
  std::string config;
  std::string environment;
  std::string objective;
  std::optional<double> tau;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> log_every;
  std::string out;
  std::uint64_t jobs = 1;
};

int cmd_train(const TrainFlags& flags, std::ostream& out, std::ostream& err) {
  ExperimentConfig config = flags.config.empty() ? ExperimentConfig{} : load_experiment_config(flags.config);
  if (!flags.environment.empty()) config.environment = flags.environment;
  if (!flags.objective.empty()) config.objective = parse_objective(flags.objective);
  if (flags.tau) config.tau = *flags.tau;
  if (flags.steps) config.steps = *flags.steps;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.log_every) config.log_every = *flags.log_every;
  if (!flags.out.empty()) config.output_dir = flags.out;

  auto problems = validate_experiment_config(config);
  if (const auto check = check_timescale(make_schedules(config)); !check.pass) problems.push_back(check.diagnostic);
  if (!problems.empty()) {
    err << "refusing to train:\n";
    for (const auto& p : problems) err << "  " << p << "\n";
    return kExitFailure;
  }

  const fs::path dir = config.output_dir;
  if (flags.jobs == 1) {
    const auto run = run_training(config);
    write_training_outputs(run, dir);
    out << training_summary(run);
    out << fmt::format("outputs written to {}\n", dir.string());
    return kExitOk;
  }
  const auto runs = run_sweep(config, flags.jobs);
  for (const auto& run : runs) write_training_outputs(run, dir / fmt::format("job-{}", run.job));
  const auto report = sweep_report(runs);
  write_text_file(dir / "sweep.csv", report);
  out << report;
  out << fmt::format("outputs written to {}\n", dir.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateFlags {
  std::string environment;
  std::string policy;
  std::string objective = "upper";
  std::uint64_t episodes = 100'000;
  std::uint64_t seed = 1;
  std::vector<double> taus{0.5};
  std::string out;
};

int cmd_simulate(const SimulateFlags& flags, std::ostream& out, std::ostream& err) {
  const auto env = load_environment(flags.environment);
  const auto& model = env.model;
  require_valid(model);
  if (flags.episodes == 0) throw UsageError("--episodes must be positive");

  Policy policy;
  if (flags.policy == "optimal") {
    const Objective objective = parse_objective(flags.objective);
    require_quantile_level(objective, flags.taus.front());
    policy = optimal_policy(model, objective, optimal_quantile(model, objective, Tau(flags.taus.front())));
  } else {
    policy = load_policy_file(flags.policy, model);
  }

  std::optional<EndStateDistribution> exact;
  try {
    exact = exact_end_distribution(model, policy);
  } catch (const std::exception& e) {
    err << fmt::format("policy is incompatible with the model: {}\n", e.what());
    return kExitFailure;
  }

  // One random stream per episode, split from the run seed.
  std::vector<EndIndex> terminals;
  terminals.reserve(flags.episodes);
  for (std::uint64_t e = 0; e < flags.episodes; ++e) {
    Rng rng(derive_seed(flags.seed, e));
    terminals.push_back(rollout(model, policy, rng).terminal);
  }
  const auto empirical = empirical_distribution(terminals, model.num_end_states());

  std::string report = fmt::format("environment: {}\nepisodes: {}\nseed: {}\n\n", env.name, flags.episodes, flags.seed);
  report += fmt::format("{:>4}  {:<16} {:>10} {:>10}\n", "i", "end state", "empirical", "exact");
  for (EndIndex i = 1; i <= model.num_end_states(); ++i) {
    report += fmt::format("{:>4}  {:<16} {:>10.5f} {:>10.5f}\n", i, model.end_states().label(i), empirical.prob(i),
                          exact->prob(i));
  }
  report += fmt::format("\ntotal variation: {:.6f}\n", total_variation(empirical, *exact));
  // A level that F hits exactly (Example 1 at tau = 0.5) is almost never hit
  // by sampled frequencies, so the report also widens the thresholds by three
  // standard errors of a frequency estimate at tau.
  const auto episodes = static_cast<double>(flags.episodes);
  for (double tau : flags.taus) {
    const double band = 3.0 * std::sqrt(tau * (1.0 - tau) / episodes);
    report += fmt::format("tau {}: empirical {}, within sampling error {}, exact {}\n", tau,
                          quantile_text(model, quantile(empirical, Tau(tau), kComputedSlack)),
                          quantile_text(model, quantile(empirical, Tau(tau), band + kComputedSlack)),
                          quantile_text(model, quantile(*exact, Tau(tau), kComputedSlack)));
  }
  emit(out, report, flags.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle-check

struct OracleFlags {
  std::uint64_t seeds = 100;
  std::uint64_t seed = 1;
  RandomMdpLimits limits;
  std::uint64_t guard = kEnumerationGuard;
  std::string out;
};

int cmd_oracle_check(const OracleFlags& flags, std::ostream& out) {
  const auto bound = random_mdp_policy_bound(flags.limits);
  if (bound > flags.guard) {
    throw UsageError(fmt::format("limits allow up to {} policies per model, above the enumeration guard of {}",
                                 bound == std::numeric_limits<std::uint64_t>::max() ? std::string("more than 1.8e19")
                                                                                    : std::to_string(bound),
                                 flags.guard));
  }
  static constexpr double kTaus[] = {0.1, 0.3, 0.5, 0.7, 0.9};

  std::string report;
  std::size_t cases = 0;
  std::size_t agreements = 0;
  std::size_t failed_models = 0;
  for (std::uint64_t k = 0; k < flags.seeds; ++k) {
    Rng rng(derive_seed(flags.seed, k));
    const auto model = random_small_mdp(rng, flags.limits);
    const auto result = check_envelope_equivalence(model, kTaus);
    cases += result.cases;
    agreements += result.agreements;
    if (!result.all_agree()) ++failed_models;
    for (const auto& m : result.mismatches) {
      report += fmt::format("model {}: tau {} {}: brute force g{}, envelope g{}\n", k, m.tau, to_string(m.objective),
                            m.brute_force, m.envelope);
    }
  }
  report += fmt::format("models: {} ({} with mismatches)\n", flags.seeds, failed_models);
  report += fmt::format("cases: {}/{} agree\n", agreements, cases);
  const bool pass = agreements == cases;
  report += fmt::format("verdict: {}\n", pass ? "PASS" : "FAIL");
  emit(out, report, flags.out);
  return pass ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantile-criterion planning and QQ-learning on episodic MDPs", "qqlearn"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  std::string validate_file;
  std::string validate_out;
  auto* validate = app.add_subcommand("validate", "Check a model file, game config or experiment config");
  validate->add_option("file", validate_file, "File to check");
  validate->add_option("--config", validate_file, "File to check (alternative to the positional argument)");
  validate->add_option("--out", validate_out, "Also write the report to this file");

  std::string solve_env;
  double solve_tau = 0.5;
  std::string solve_objective = "upper";
  std::string solve_out;
  auto* solve = app.add_subcommand("solve", "Exact optimal quantile, envelope and greedy policy");
  solve->add_option("model", solve_env, "Model file, game config or built-in (wwtbam, two-action-toy, example1)");
  solve->add_option("--config", solve_env, "Same as the positional model argument");
  solve->add_option("--tau", solve_tau, "Quantile level")->check(CLI::Range(0.0, 1.0));
  solve->add_option("--objective", solve_objective, "upper or lower")->check(CLI::IsMember({"upper", "lower"}));
  solve->add_option("--out", solve_out, "Also write the report to this file");

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Run QQ-learning and write trace.csv, summary.txt and plots");
  train->add_option("--config", train_flags.config, "Experiment config file")->check(CLI::ExistingFile);
  train->add_option("--environment", train_flags.environment, "Override the config's environment");
  train->add_option("--objective", train_flags.objective, "upper or lower")->check(CLI::IsMember({"upper", "lower"}));
  train->add_option("--tau", train_flags.tau, "Quantile level")->check(CLI::Range(0.0, 1.0));
  train->add_option("--steps", train_flags.steps, "Learning steps");
  train->add_option("--seed", train_flags.seed, "Base seed");
  train->add_option("--log-every", train_flags.log_every, "Trace interval in steps");
  train->add_option("--out", train_flags.out, "Output directory");
  train->add_option("--seeds", train_flags.jobs, "Number of independent jobs (runs concurrently)")
      ->check(CLI::PositiveNumber);

  SimulateFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "Roll out a policy and report empirical quantiles");
  simulate->add_option("model", sim_flags.environment, "Model file, game config or built-in");
  simulate->add_option("--config", sim_flags.environment, "Same as the positional model argument");
  simulate->add_option("--policy", sim_flags.policy, "Policy file, or 'optimal' for the exact optimum at the first tau")
      ->required();
  simulate->add_option("--objective", sim_flags.objective, "Objective used by --policy optimal")
      ->check(CLI::IsMember({"upper", "lower"}));
  simulate->add_option("--episodes", sim_flags.episodes, "Number of rollouts");
  simulate->add_option("--seed", sim_flags.seed, "Base seed; episode e uses stream e");
  simulate->add_option("--tau", sim_flags.taus, "Quantile level (repeatable)")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--out", sim_flags.out, "Also write the report to this file");

  OracleFlags oracle_flags;
  auto* oracle = app.add_subcommand("oracle-check", "Brute force vs envelope optimal quantiles on random MDPs");
  oracle->add_option("--seeds", oracle_flags.seeds, "Number of random models");
  oracle->add_option("--seed", oracle_flags.seed, "Base seed; model k uses stream k");
  oracle->add_option("--max-states", oracle_flags.limits.max_decision_states, "Decision states per model")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--max-actions", oracle_flags.limits.max_actions, "Actions per state")->check(CLI::PositiveNumber);
  oracle->add_option("--max-horizon", oracle_flags.limits.max_horizon, "Horizon")->check(CLI::PositiveNumber);
  oracle->add_option("--max-end-states", oracle_flags.limits.max_end_states, "End states")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--grid", oracle_flags.limits.probability_grid, "Probabilities on a 1/grid lattice (0: off)")
      ->check(CLI::NonNegativeNumber);
  oracle->add_option("--guard", oracle_flags.guard, "Largest policy count the oracle may enumerate");
  oracle->add_option("--out", oracle_flags.out, "Also write the report to this file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    err << "run 'qqlearn --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*validate) {
      if (validate_file.empty()) throw UsageError("validate: expected a file");
      return cmd_validate(validate_file, validate_out, out);
    }
    if (*solve) {
      if (solve_env.empty()) throw UsageError("solve: expected a model");
      return cmd_solve(solve_env, solve_tau, parse_objective(solve_objective), solve_out, out);
    }
    if (*train) return cmd_train(train_flags, out, err);
    if (*simulate) {
      if (sim_flags.environment.empty()) throw UsageError("simulate: expected a model");
      return cmd_simulate(sim_flags, out, err);
    }
    if (*oracle) return cmd_oracle_check(oracle_flags, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace qql::cli
