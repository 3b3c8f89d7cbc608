#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "curverl/passrate_model.hpp"
#include "curverl/refdist.hpp"
#include "curverl/weighting.hpp"

namespace curverl {

/// Which pass rate the weight is evaluated at. Empirical follows the
/// algorithm as written; Exact is a diagnostic for measuring the bias of
/// evaluating the weight on the same rewards it multiplies.
enum class WeightArgument { Empirical, Exact };

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t n_rollouts = 8;
  std::size_t t0 = 10;
  double learning_rate = 10.0;
  std::size_t steps = 200;
  /// A reference-based scheme with a non-null reference is pinned to it for
  /// the whole run; with a null reference it is re-estimated every step from
  /// the sliding window.
  WeightScheme scheme = Reinforce{};
  std::uint64_t seed = 0;
  /// Below this many window entries reference-based schemes use the uniform
  /// reference (MaxRL behaviour).
  std::size_t min_window_count = 64;
  WeightArgument weight_argument = WeightArgument::Empirical;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const TrainConfig& config);

struct PromptStepRecord {
  std::int64_t prompt_id = 0;
  double p_hat = 0.0;
  /// 0 for inactive prompts.
  double weight = 0.0;
  double grad_norm = 0.0;
  bool active = false;
};

struct StepLog {
  std::int64_t step = 0;
  std::string scheme;
  std::vector<PromptStepRecord> per_prompt;
  /// d_0-weighted mean exact pass rate after this step's update.
  double mean_exact_pass_rate = 0.0;
  double active_fraction = 0.0;
  /// Mean weight over the active prompts of the batch (0 if none).
  double z_theta = 0.0;
  /// Window size after this step's append and eviction.
  std::size_t window_size = 0;
  /// L2 norm of the batch-averaged gradient.
  double grad_norm = 0.0;
  /// Reference-based scheme ran on the uniform fallback this step.
  bool cold_start = false;
  /// p * w(p) at the grid {1/N, ..., (N-1)/N}: the weight relative to MaxRL.
  std::vector<double> relative_multiplier;
  /// Window histogram used for this step's weights, when one was estimated.
  std::shared_ptr<const ReferenceDistribution> reference;
};

/// (1/N) sum_i weight (r_i - p_hat) S_i for one prompt's rollout group.
std::vector<double> per_prompt_gradient(const PromptInstance& prompt, const RolloutBatch& batch, double weight);

struct EffectiveDistribution {
  std::vector<double> d_theta;
  double z_theta = 0.0;
};

/// d_theta = d_0 w / Z with Z = sum d_0 w. Throws std::domain_error when Z is 0.
EffectiveDistribution effective_distribution(std::span<const double> weights, std::span<const double> base_weights);

/// Analytic population gradient sum_x d_0(x) w(p_x) grad p_x, one block of M
/// per prompt. Prompts with p in {0, 1} contribute zero without evaluating w.
std::vector<double> population_gradient(const PromptPopulation& population,
                                        const std::function<double(double)>& weight);

/// Same, with each prompt's pass rate and gradient passed through G first:
/// sum_x d_0(x) w(G(p_x)) G'(p_x) grad p_x.
std::vector<double> transformed_population_gradient(const PromptPopulation& population,
                                                    const std::function<double(double)>& weight,
                                                    const MonotoneMap& map);

struct CalibrationDiscrepancy {
  /// max_j |g_raw[j] - g_transformed[j]|
  double discrepancy = 0.0;
  /// max_j |g_raw[j]|
  double gradient_max_norm = 0.0;
};

/// Reverse-hazard gradient on raw rates with `reference` versus on G-mapped
/// rates with the pushforward reference F o G^{-1}.
CalibrationDiscrepancy calibration_invariance_check(const PromptPopulation& population,
                                                    const ReferenceHandle& reference, const MonotoneMap& map);

/// The same comparison for a pointwise scheme, which has no reference to
/// transform along with the rates.
CalibrationDiscrepancy pointwise_calibration_check(const PromptPopulation& population, const WeightScheme& scheme,
                                                   const MonotoneMap& map);

struct WeightBias {
  /// Monte Carlo mean of the estimator with w(p_hat), minus w(p) grad p.
  std::vector<double> empirical_bias;
  /// Same with w held at w(p).
  std::vector<double> fixed_bias;
  std::size_t active_batches = 0;
};

/// Measures the bias introduced by evaluating the weight at p_hat. Inactive
/// groups contribute zero, as in training.
WeightBias measure_weight_bias(const PromptInstance& prompt, const WeightScheme& scheme, std::size_t n_rollouts,
                               std::size_t batches, std::uint64_t seed);

/// Policy-reweighted contextual bandit trainer: one sliding-window reference
/// update plus one plain gradient-ascent step per call.
class Trainer {
 public:
  Trainer(PromptPopulation population, TrainConfig config);

  StepLog step();

  /// Runs the remaining configured steps, calling `on_step` after each.
  void run(const std::function<void(const StepLog&)>& on_step);

  const PromptPopulation& population() const noexcept { return population_; }
  const SlidingWindow& window() const noexcept { return window_; }
  const TrainConfig& config() const noexcept { return config_; }
  std::int64_t next_step() const noexcept { return next_step_; }

 private:
  PromptPopulation population_;
  TrainConfig config_;
  SlidingWindow window_;
  std::int64_t next_step_ = 0;
};

}  // namespace curverl
