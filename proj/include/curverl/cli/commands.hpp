#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "curverl/cli/config.hpp"
#include "curverl/eval.hpp"
#include "curverl/refdist.hpp"

namespace curverl::cli {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

struct RunSummary {
  std::string label;
  std::filesystem::path dir;
  double initial_mean_exact_pass_rate = 0.0;
  double final_mean_exact_pass_rate = 0.0;
  std::optional<EvalReport> eval;
};

/// Trains `config` and writes into config.output_dir:
///   manifest.json, train_log.csv, refdist.csv, multiplier.csv,
///   population_final.json, per_prompt.csv (optional),
///   passk.csv and buckets.csv (when evaluation is enabled).
RunSummary run_training(const ExperimentConfig& config);

int cmd_train(const ExperimentConfig& config, std::ostream& out);

/// `suite` is one of verify_suite_names() or "all".
int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err);

struct WeightsOptions {
  SchemeSpec scheme;
  std::size_t n_rollouts = 8;
  /// refdist.csv dump used as the reference for window-based schemes.
  std::optional<std::filesystem::path> refdist;
  /// Snapshot step to take from the dump; the last one when empty.
  std::optional<std::int64_t> step;
  std::filesystem::path output = "weights.csv";
};

int cmd_weights(const WeightsOptions& options, std::ostream& out, std::ostream& err);

/// One run per scheme under config.output_dir/<label>, plus compare.csv.
int cmd_compare(const ExperimentConfig& config, const std::vector<std::string>& schemes, std::ostream& out,
                std::ostream& err);

struct PasskOptions {
  std::filesystem::path population;
  std::string label = "policy";
  EvalSpec eval;
  std::filesystem::path out_dir = ".";
};

int cmd_passk(const PasskOptions& options, std::ostream& out);

/// Rebuilds the histogram stored in a refdist.csv dump at `step` (the last
/// step present when empty).
ReferenceDistribution load_refdist_snapshot(const std::filesystem::path& path, std::optional<std::int64_t> step);

}  // namespace curverl::cli
