#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qqlearn/io.hpp"
#include "qqlearn/learning.hpp"
#include "qqlearn/model.hpp"

namespace qql {

struct LoadedEnvironment {
  EpisodicModel model;
  std::string name;
  /// Transition probabilities are known, so exact-solver comparisons are
  /// meaningful. Every built-in and file-backed environment has them.
  bool full_model = true;
};

/// Built-in name (wwtbam, two-action-toy, example1), game config file or
/// model file.
LoadedEnvironment load_environment(const std::string& spec);

struct ExactComparison {
  EndIndex optimal_quantile = 0;
  /// Equilibrium threshold of the exact threshold search.
  double reference_theta = 0.0;
  /// End distribution and quantile of the learned greedy policy.
  std::vector<double> greedy_distribution;
  EndIndex greedy_quantile = 0;
};

struct TrainingRun {
  ExperimentConfig config;
  std::uint64_t job = 0;
  std::string environment_name;
  EndStateSet end_labels;
  LearningResult result;
  EndIndex learned_quantile = 0;
  std::optional<ExactComparison> exact;
};

/// Runs QQ-learning for job `job` of the config; the learner's random stream
/// is derive_seed(config.seed, job).
TrainingRun run_training(const ExperimentConfig& config, const LoadedEnvironment& env, std::uint64_t job = 0);
TrainingRun run_training(const ExperimentConfig& config, std::uint64_t job = 0);

std::string training_summary(const TrainingRun& run);

/// Writes trace.csv, summary.txt, v_estimate.svg, score.svg and theta.svg.
void write_training_outputs(const TrainingRun& run, const std::filesystem::path& dir);

/// Independent jobs 0..jobs-1 run concurrently; results are ordered by job.
std::vector<TrainingRun> run_sweep(const ExperimentConfig& config, std::uint64_t jobs);
std::string sweep_report(const std::vector<TrainingRun>& runs);

}  // namespace qql
