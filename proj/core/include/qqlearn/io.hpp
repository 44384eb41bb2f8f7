#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qqlearn/environments.hpp"
#include "qqlearn/learning.hpp"
#include "qqlearn/model.hpp"
#include "qqlearn/reward.hpp"

namespace qql {

/// Unreadable file, malformed JSON (message carries path:line:column) or a
/// schema violation such as an unknown key.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model file (keys: states, actions, transitions, initial, end_states,
/// horizon; optional end_labels, progress_encoded). See docs/file-formats.md.
EpisodicModel parse_model(const std::string& text, const std::string& source = "<string>");
EpisodicModel load_model_file(const std::filesystem::path& path);

/// Game config file (keys: questions, payouts, guarantees, base_prob,
/// lifelines[*].{name, boost}, allow_quit_at_first,
/// single_lifeline_per_question).
WwtbamConfig parse_wwtbam_config(const std::string& text, const std::string& source = "<string>");
WwtbamConfig load_wwtbam_config(const std::filesystem::path& path);

/// A config file is recognized as a game config by its "questions" key and as
/// a model file otherwise.
using EnvironmentDocument = std::variant<EpisodicModel, WwtbamConfig>;
EnvironmentDocument load_environment_document(const std::filesystem::path& path);

/// Policy file: {"stationary": [a_s...]} or {"rules": [[a_s...] per step]};
/// null or -1 marks an undefined rule.
Policy parse_policy(const std::string& text, const EpisodicModel& model, const std::string& source = "<string>");
Policy load_policy_file(const std::filesystem::path& path, const EpisodicModel& model);

struct ExperimentConfig {
  /// Built-in name (wwtbam, two-action-toy, example1) or a file path.
  std::string environment = "wwtbam";
  Objective objective = Objective::kUpper;
  double tau = 0.3;
  std::uint64_t steps = 1'000'000;
  std::uint64_t seed = 1;
  double alpha_exponent = 0.55;
  double epsilon = 0.01;
  bool decaying_epsilon = false;
  std::uint64_t log_every = 1000;
  std::string output_dir = "out";
  double theta0 = 1.0;
  std::uint64_t theta_warmup = 0;
  Layering layering = Layering::kAutomatic;
};

std::vector<std::string> validate_experiment_config(const ExperimentConfig& config);
/// Relative environment paths are resolved against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source = "<string>",
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

Schedules make_schedules(const ExperimentConfig& config);

inline constexpr const char* kTraceHeader = "n,theta,v_estimate,score,epsilon,alpha,beta,episode_count";

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace);
std::string trace_csv(std::span<const TraceRecord> trace);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace qql
