#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "curverl/passrate_model.hpp"

namespace curverl {

/// Rollout pool for one evaluation prompt.
struct EvalSampleSet {
  std::int64_t prompt_id = 0;
  std::vector<std::uint8_t> rewards;
  std::vector<std::size_t> answers;

  std::size_t size() const noexcept { return rewards.size(); }
  double mean_reward() const noexcept;
};

EvalSampleSet sample_eval_set(const PromptInstance& prompt, std::size_t rollouts, Rng& rng);

/// k = 1: raw mean reward. k >= 2: share of `resamples` bootstrap draws of k
/// indices (uniform, with replacement) containing at least one success.
/// Throws std::invalid_argument when k is 0 or exceeds the pool size.
double pass_at_k(const EvalSampleSet& samples, std::size_t k, std::size_t resamples, Rng& rng);

/// Unbiased without-replacement estimator 1 - C(R-c, k) / C(R, k).
double pass_at_k_exact(const EvalSampleSet& samples, std::size_t k);

/// 1 iff the modal answer among the first k lies in `correct`; ties go to the
/// smallest response index.
int majority_at_k(const EvalSampleSet& samples, std::size_t k, std::span<const std::size_t> correct);

struct DifficultyCounts {
  std::size_t unsolvable = 0;  // p = 0
  std::size_t hard = 0;        // p in (0, 1/2]
  std::size_t medium = 0;      // p in (1/2, 1)
  std::size_t easy = 0;        // p = 1

  std::size_t total() const noexcept { return unsolvable + hard + medium + easy; }
  bool operator==(const DifficultyCounts&) const = default;
};

DifficultyCounts difficulty_histogram(std::span<const double> pass_rates);

struct EvalSpec {
  std::size_t rollouts = 256;
  std::vector<std::size_t> k_values{1, 2, 4, 8, 16, 32, 64, 128};
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
};

void validate(const EvalSpec& spec);

struct EvalReport {
  std::vector<std::size_t> k_values;
  /// Mean over prompts of bootstrap pass@k, aligned with k_values.
  std::vector<double> mean_pass_at_k;
  /// Mean over prompts of majority@R.
  double mean_majority = 0.0;
  /// Buckets of the empirical pass rate over the evaluation pool.
  DifficultyCounts buckets;
  /// Share of prompts whose exact pass rate is below 1/R.
  double unsolved_fraction = 0.0;
};

/// Independent rollout pool and bootstrap streams per prompt.
EvalReport evaluate_population(const PromptPopulation& population, const EvalSpec& spec);

/// Rows (scheme, k, mean_pass_at_k).
void write_passk_csv(std::ostream& out, const std::string& scheme, const EvalReport& report, bool header = true);
/// Rows (scheme, bucket, count).
void write_bucket_csv(std::ostream& out, const std::string& scheme, const EvalReport& report, bool header = true);

}  // namespace curverl
