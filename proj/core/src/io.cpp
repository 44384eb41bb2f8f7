#include "qqlearn/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>

#include "json.hpp"

namespace qql {

using nlohmann::json;

namespace {

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t k = 0; k + 1 < end; ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return fmt::format("{}:{}", line, column);
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Strip nlohmann's "[json.exception.parse_error.101] parse error at line x, column y: " prefix.
    std::string what = e.what();
    if (const auto colon = what.find(": "); colon != std::string::npos) what = what.substr(colon + 2);
    throw FormatError(fmt::format("{}:{}: parse error: {}", source, location(text, e.byte), what));
  }
}

void reject_unknown_keys(const json& object, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!object.is_object()) {
    throw FormatError(fmt::format("{}: expected a JSON object", where));
  }
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key)) {
      throw FormatError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

const json& require(const json& object, const char* key, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end()) throw FormatError(fmt::format("{}: missing required key '{}'", where, key));
  return *it;
}

template <typename T>
T as(const json& value, const std::string& where) {
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!value.is_number_unsigned()) throw FormatError(fmt::format("{}: expected a non-negative integer", where));
  }
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: wrong type ({})", where, value.type_name()));
  }
}

template <typename T>
T optional_value(const json& object, const char* key, T fallback, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end()) return fallback;
  return as<T>(*it, fmt::format("{}.{}", where, key));
}

// Resolves an index or a label against a label table.
int resolve(const json& ref, const std::vector<std::string>& labels, const std::string& what,
            const std::string& where) {
  if (ref.is_number_integer()) {
    const auto k = ref.get<long long>();
    if (k < 0 || k >= static_cast<long long>(labels.size())) {
      throw FormatError(fmt::format("{}: {} index {} out of range", where, what, k));
    }
    return static_cast<int>(k);
  }
  if (ref.is_string()) {
    const auto name = ref.get<std::string>();
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end() || name.empty()) {
      throw FormatError(fmt::format("{}: unknown {} '{}'", where, what, name));
    }
    return static_cast<int>(it - labels.begin());
  }
  throw FormatError(fmt::format("{}: {} must be an index or a label", where, what));
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("{}: cannot open file", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(fmt::format("{}: cannot write file", path.string()));
  out << text;
  if (!out) throw FormatError(fmt::format("{}: write failed", path.string()));
}

EpisodicModel parse_model(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  reject_unknown_keys(doc, {"states", "actions", "transitions", "initial", "end_states", "end_labels", "horizon",
                            "progress_encoded"},
                      source);

  EpisodicModel model;
  std::vector<std::string> state_labels;
  const json& states = require(doc, "states", source);
  if (states.is_number_integer()) {
    const auto count = states.get<long long>();
    if (count < 1) throw FormatError(fmt::format("{}: states must be positive", source));
    for (long long k = 0; k < count; ++k) state_labels.emplace_back();
  } else if (states.is_array()) {
    for (const auto& label : states) state_labels.push_back(as<std::string>(label, source + ".states"));
  } else {
    throw FormatError(fmt::format("{}.states: expected a count or a list of labels", source));
  }
  for (const auto& label : state_labels) model.add_state(label);

  std::vector<std::vector<std::string>> action_labels(state_labels.size());
  if (const auto it = doc.find("actions"); it != doc.end()) {
    if (!it->is_array() || it->size() != state_labels.size()) {
      throw FormatError(fmt::format("{}.actions: expected one entry per state ({})", source, state_labels.size()));
    }
    for (std::size_t s = 0; s < state_labels.size(); ++s) {
      const auto& entry = (*it)[s];
      const auto where = fmt::format("{}.actions[{}]", source, s);
      if (entry.is_number_integer()) {
        const auto count = entry.get<long long>();
        if (count < 0) throw FormatError(where + ": negative action count");
        action_labels[s].assign(static_cast<std::size_t>(count), std::string());
      } else if (entry.is_array()) {
        for (const auto& label : entry) action_labels[s].push_back(as<std::string>(label, where));
      } else {
        throw FormatError(where + ": expected a count or a list of labels");
      }
      for (const auto& label : action_labels[s]) model.add_action(static_cast<StateId>(s), label);
    }
  }

  const json& transitions = require(doc, "transitions", source);
  if (!transitions.is_array()) throw FormatError(source + ".transitions: expected a list");
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    const auto& row = transitions[k];
    const auto where = fmt::format("{}.transitions[{}]", source, k);
    if (!row.is_array() || row.size() != 4) {
      throw FormatError(where + ": expected [state, action, next_state, probability]");
    }
    const int s = resolve(row[0], state_labels, "state", where);
    const int a = resolve(row[1], action_labels[static_cast<std::size_t>(s)], "action", where);
    const int next = resolve(row[2], state_labels, "state", where);
    if (!row[3].is_number()) throw FormatError(where + ": probability must be a number");
    model.add_transition(s, a, next, row[3].get<double>());
  }

  model.set_initial(resolve(require(doc, "initial", source), state_labels, "state", source + ".initial"));
  const json& ends = require(doc, "end_states", source);
  if (!ends.is_array()) throw FormatError(source + ".end_states: expected an ordered list");
  std::vector<StateId> end_ids;
  for (const auto& ref : ends) end_ids.push_back(resolve(ref, state_labels, "state", source + ".end_states"));
  std::vector<std::string> end_labels;
  if (const auto it = doc.find("end_labels"); it != doc.end()) {
    end_labels = as<std::vector<std::string>>(*it, source + ".end_labels");
    if (end_labels.size() != end_ids.size()) {
      throw FormatError(source + ".end_labels: expected one label per end state");
    }
  }
  try {
    model.set_end_states(end_ids, end_labels);
  } catch (const ModelError& e) {
    throw FormatError(fmt::format("{}.end_states: {}", source, e.what()));
  }
  const json& horizon = require(doc, "horizon", source);
  if (!horizon.is_number_integer()) throw FormatError(source + ".horizon: expected an integer");
  model.set_horizon(horizon.get<int>());
  model.set_progress_encoded(optional_value(doc, "progress_encoded", false, source));
  return model;
}

EpisodicModel load_model_file(const std::filesystem::path& path) {
  return parse_model(read_text_file(path), path.string());
}

WwtbamConfig parse_wwtbam_config(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  reject_unknown_keys(doc, {"questions", "payouts", "guarantees", "base_prob", "lifelines", "allow_quit_at_first",
                            "single_lifeline_per_question"},
                      source);
  WwtbamConfig config;
  config.num_questions = as<int>(require(doc, "questions", source), source + ".questions");
  config.payouts = as<std::vector<std::int64_t>>(require(doc, "payouts", source), source + ".payouts");
  config.guarantee_questions = optional_value(doc, "guarantees", std::vector<int>{}, source);
  config.base_prob = as<std::vector<double>>(require(doc, "base_prob", source), source + ".base_prob");
  const json& lifelines = require(doc, "lifelines", source);
  if (!lifelines.is_array()) throw FormatError(source + ".lifelines: expected a list");
  for (std::size_t l = 0; l < lifelines.size(); ++l) {
    const auto where = fmt::format("{}.lifelines[{}]", source, l);
    reject_unknown_keys(lifelines[l], {"name", "boost"}, where);
    Lifeline lifeline;
    lifeline.name = optional_value(lifelines[l], "name", fmt::format("lifeline{}", l + 1), where);
    lifeline.boost = as<std::vector<double>>(require(lifelines[l], "boost", where), where + ".boost");
    config.lifelines.push_back(std::move(lifeline));
  }
  config.allow_quit_at_first = optional_value(doc, "allow_quit_at_first", true, source);
  config.single_lifeline_per_question = optional_value(doc, "single_lifeline_per_question", false, source);
  return config;
}

WwtbamConfig load_wwtbam_config(const std::filesystem::path& path) {
  return parse_wwtbam_config(read_text_file(path), path.string());
}

EnvironmentDocument load_environment_document(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const json doc = parse_json(text, path.string());
  if (doc.is_object() && doc.contains("questions")) return parse_wwtbam_config(text, path.string());
  return parse_model(text, path.string());
}

Policy parse_policy(const std::string& text, const EpisodicModel& model, const std::string& source) {
  const json doc = parse_json(text, source);
  reject_unknown_keys(doc, {"stationary", "rules"}, source);
  const auto read_row = [&](const json& row, const std::string& where) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(model.num_states())) {
      throw FormatError(fmt::format("{}: expected one action per state ({})", where, model.num_states()));
    }
    std::vector<ActionId> actions;
    for (std::size_t s = 0; s < row.size(); ++s) {
      const auto& entry = row[s];
      if (entry.is_null()) {
        actions.push_back(Policy::kUndefined);
        continue;
      }
      if (!entry.is_number_integer()) throw FormatError(fmt::format("{}[{}]: expected an action index", where, s));
      const int a = entry.get<int>();
      if (a != Policy::kUndefined && (a < 0 || a >= model.num_actions(static_cast<StateId>(s)))) {
        throw FormatError(fmt::format("{}[{}]: action {} is not admissible in state {}", where, s, a, s));
      }
      actions.push_back(a);
    }
    return actions;
  };

  const bool has_stationary = doc.contains("stationary");
  if (has_stationary == doc.contains("rules")) {
    throw FormatError(source + ": expected exactly one of 'stationary' or 'rules'");
  }
  if (has_stationary) {
    return Policy::stationary(model.horizon(), read_row(doc["stationary"], source + ".stationary"));
  }
  const json& rules = doc["rules"];
  if (!rules.is_array() || rules.size() != static_cast<std::size_t>(model.horizon())) {
    throw FormatError(fmt::format("{}.rules: expected one row per step ({})", source, model.horizon()));
  }
  Policy policy(model.horizon(), model.num_states());
  for (std::size_t t = 0; t < rules.size(); ++t) {
    const auto row = read_row(rules[t], fmt::format("{}.rules[{}]", source, t));
    for (std::size_t s = 0; s < row.size(); ++s) {
      policy.set(static_cast<int>(t + 1), static_cast<StateId>(s), row[s]);
    }
  }
  return policy;
}

Policy load_policy_file(const std::filesystem::path& path, const EpisodicModel& model) {
  return parse_policy(read_text_file(path), model, path.string());
}

std::vector<std::string> validate_experiment_config(const ExperimentConfig& config) {
  std::vector<std::string> errors;
  if (!(config.tau > 0.0 && config.tau < 1.0)) errors.push_back(fmt::format("tau: {} outside (0, 1)", config.tau));
  if (config.steps < 1) errors.push_back("steps: must be at least 1");
  if (!(config.alpha_exponent > 0.5 && config.alpha_exponent < 1.0)) {
    errors.push_back(fmt::format("schedules.alpha_exponent: {} outside (0.5, 1)", config.alpha_exponent));
  }
  if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0)) {
    errors.push_back(fmt::format("schedules.epsilon: {} outside [0, 1]", config.epsilon));
  }
  if (config.log_every < 1) errors.push_back("log_every: must be at least 1");
  if (config.environment.empty()) errors.push_back("environment: must not be empty");
  return errors;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source,
                                         const std::filesystem::path& base_dir) {
  const json doc = parse_json(text, source);
  reject_unknown_keys(doc, {"environment", "objective", "tau", "steps", "seed", "schedules", "log_every",
                            "output_dir", "theta0", "theta_warmup", "layering"},
                      source);
  ExperimentConfig config;
  config.environment = optional_value(doc, "environment", config.environment, source);
  try {
    config.objective = parse_objective(optional_value(doc, "objective", std::string("upper"), source));
  } catch (const std::invalid_argument& e) {
    throw FormatError(fmt::format("{}.objective: {}", source, e.what()));
  }
  config.tau = optional_value(doc, "tau", config.tau, source);
  config.steps = optional_value(doc, "steps", config.steps, source);
  config.seed = optional_value(doc, "seed", config.seed, source);
  config.log_every = optional_value(doc, "log_every", config.log_every, source);
  config.output_dir = optional_value(doc, "output_dir", config.output_dir, source);
  config.theta0 = optional_value(doc, "theta0", config.theta0, source);
  config.theta_warmup = optional_value(doc, "theta_warmup", config.theta_warmup, source);
  const auto layering = optional_value(doc, "layering", std::string("auto"), source);
  if (layering == "auto") {
    config.layering = Layering::kAutomatic;
  } else if (layering == "time-indexed") {
    config.layering = Layering::kTimeIndexed;
  } else if (layering == "single") {
    config.layering = Layering::kSingle;
  } else {
    throw FormatError(fmt::format("{}.layering: expected auto, time-indexed or single, got '{}'", source, layering));
  }
  if (const auto it = doc.find("schedules"); it != doc.end()) {
    const auto where = source + ".schedules";
    reject_unknown_keys(*it, {"alpha_exponent", "beta", "epsilon", "epsilon_schedule"}, where);
    config.alpha_exponent = optional_value(*it, "alpha_exponent", config.alpha_exponent, where);
    config.epsilon = optional_value(*it, "epsilon", config.epsilon, where);
    const auto beta = optional_value(*it, "beta", std::string("1/n"), where);
    if (beta != "1/n") throw FormatError(fmt::format("{}.beta: only '1/n' is supported, got '{}'", where, beta));
    const auto eps_schedule = optional_value(*it, "epsilon_schedule", std::string("constant"), where);
    if (eps_schedule == "constant") {
      config.decaying_epsilon = false;
    } else if (eps_schedule == "decaying") {
      config.decaying_epsilon = true;
    } else {
      throw FormatError(fmt::format("{}.epsilon_schedule: expected constant or decaying, got '{}'", where,
                                    eps_schedule));
    }
  }
  static const std::set<std::string> kBuiltins = {"wwtbam", "two-action-toy", "example1"};
  if (!kBuiltins.contains(config.environment) && !base_dir.empty()) {
    const std::filesystem::path env_path(config.environment);
    if (env_path.is_relative()) config.environment = (base_dir / env_path).lexically_normal().string();
  }
  if (auto errors = validate_experiment_config(config); !errors.empty()) {
    std::string message = source + ": invalid experiment config:";
    for (const auto& e : errors) message += "\n  " + e;
    throw FormatError(message);
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_text_file(path), path.string(), path.parent_path());
}

Schedules make_schedules(const ExperimentConfig& config) {
  return config.decaying_epsilon ? Schedules::decaying_exploration(config.alpha_exponent, config.epsilon)
                                 : Schedules::standard(config.alpha_exponent, config.epsilon);
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace) { out << trace_csv(trace); }

std::string trace_csv(std::span<const TraceRecord> trace) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.n, r.theta, r.v_estimate, r.score, r.epsilon, r.alpha, r.beta,
                       r.episode_count);
  }
  return out;
}

}  // namespace qql
