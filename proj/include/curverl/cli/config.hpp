#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "curverl/eval.hpp"
#include "curverl/population.hpp"
#include "curverl/trainer.hpp"

namespace curverl::cli {

/// Bad or unreadable configuration; the message starts with the offending
/// field path (e.g. "train.t0: must be a positive integer").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigVersion = 1;

/// Serializable description of a weighting scheme. Reference-based schemes
/// take `reference`: "window" (re-estimated each step) or "uniform" (pinned).
struct SchemeSpec {
  std::string name = "reinforce";
  double eta = 1.0;
  double lambda = 0.5;
  std::string reference = "window";

  bool operator==(const SchemeSpec&) const = default;
};

/// Parses "name[:arg]" as used on the command line: "entropic:2",
/// "integrated_convex:0.25", "curve:uniform".
SchemeSpec parse_scheme_label(const std::string& label);
std::string scheme_label(const SchemeSpec& spec);

WeightScheme build_scheme(const SchemeSpec& spec);

struct ExperimentConfig {
  int version = kConfigVersion;
  PopulationSpec population;
  /// Load the population from this JSON file instead of generating it.
  std::optional<std::string> population_file;
  TrainConfig train;
  SchemeSpec scheme;
  bool eval_enabled = true;
  EvalSpec eval;
  std::string output_dir = "runs/default";
  bool per_prompt_log = false;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Strict parse: unknown keys, wrong types and out-of-range values all throw
/// ConfigError. Missing keys take the defaults above.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// --seed sets the population, training and evaluation seeds together.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

PromptPopulation materialize_population(const ExperimentConfig& config);

}  // namespace curverl::cli
