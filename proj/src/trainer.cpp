#include "curverl/trainer.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "curverl/logging.hpp"

namespace curverl {
namespace {

constexpr std::uint64_t kBatchStream = 0x62617463u;
constexpr std::uint64_t kRolloutStream = 0x726f6c6cu;

double l2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double max_abs(std::span<const double> v) {
  double hi = 0.0;
  for (double x : v) hi = std::max(hi, std::abs(x));
  return hi;
}

}  // namespace

void validate(const TrainConfig& config) {
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (config.n_rollouts < 2) throw std::invalid_argument("n_rollouts must be at least 2");
  if (config.t0 == 0) throw std::invalid_argument("t0 must be positive");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (config.steps == 0) throw std::invalid_argument("steps must be positive");
  validate(config.scheme);
}

std::vector<double> per_prompt_gradient(const PromptInstance& prompt, const RolloutBatch& batch, double weight) {
  const auto m = prompt.num_responses();
  std::vector<double> grad(m, 0.0);
  const auto n = batch.size();
  if (n == 0) return grad;
  const auto pi = softmax(prompt.logits);
  const double p_hat = batch.empirical_pass_rate;
  for (std::size_t i = 0; i < n; ++i) {
    const double adv = weight * (static_cast<double>(batch.rewards[i]) - p_hat);
    if (adv == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      const double score = (j == batch.responses[i] ? 1.0 : 0.0) - pi[j];
      grad[j] += adv * score;
    }
  }
  for (auto& g : grad) g /= static_cast<double>(n);
  return grad;
}

EffectiveDistribution effective_distribution(std::span<const double> weights, std::span<const double> base_weights) {
  if (weights.size() != base_weights.size()) throw std::invalid_argument("weights and base_weights must be aligned");
  EffectiveDistribution out;
  out.d_theta.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw std::domain_error("effective distribution needs nonnegative weights");
    out.d_theta[i] = base_weights[i] * weights[i];
    out.z_theta += out.d_theta[i];
  }
  if (!(out.z_theta > 0.0)) throw std::domain_error("effective distribution undefined: all weights are zero");
  for (auto& d : out.d_theta) d /= out.z_theta;
  return out;
}

std::vector<double> population_gradient(const PromptPopulation& population,
                                        const std::function<double(double)>& weight) {
  return transformed_population_gradient(population, weight, identity_map());
}

std::vector<double> transformed_population_gradient(const PromptPopulation& population,
                                                    const std::function<double(double)>& weight,
                                                    const MonotoneMap& map) {
  const auto m = population.m;
  std::vector<double> out(population.size() * m, 0.0);
  for (std::size_t x = 0; x < population.size(); ++x) {
    const auto& prompt = population.prompts[x];
    const double p = exact_pass_rate(prompt);
    if (!(p > 0.0 && p < 1.0)) continue;
    const double scale = population.base_weights[x] * weight(map.forward(p)) * map.derivative(p);
    const auto grad = exact_pass_rate_gradient(prompt);
    for (std::size_t j = 0; j < m; ++j) out[x * m + j] = scale * grad[j];
  }
  return out;
}

CalibrationDiscrepancy calibration_invariance_check(const PromptPopulation& population,
                                                    const ReferenceHandle& reference, const MonotoneMap& map) {
  if (!reference) throw std::invalid_argument("calibration check needs a reference");
  validate(map);
  const auto mapped = pushforward_reference(reference, map);
  const auto raw = population_gradient(population, [&](double p) { return pointwise_weight(Curve{reference}, p); });
  const auto moved = transformed_population_gradient(
      population, [&](double u) { return pointwise_weight(Curve{mapped}, u); }, map);
  CalibrationDiscrepancy out;
  for (std::size_t j = 0; j < raw.size(); ++j) out.discrepancy = std::max(out.discrepancy, std::abs(raw[j] - moved[j]));
  out.gradient_max_norm = max_abs(raw);
  return out;
}

CalibrationDiscrepancy pointwise_calibration_check(const PromptPopulation& population, const WeightScheme& scheme,
                                                   const MonotoneMap& map) {
  validate(map);
  if (uses_reference(scheme)) throw std::invalid_argument("pointwise calibration check needs a pointwise scheme");
  auto w = [&](double p) { return pointwise_weight(scheme, p); };
  const auto raw = population_gradient(population, w);
  const auto moved = transformed_population_gradient(population, w, map);
  CalibrationDiscrepancy out;
  for (std::size_t j = 0; j < raw.size(); ++j) out.discrepancy = std::max(out.discrepancy, std::abs(raw[j] - moved[j]));
  out.gradient_max_norm = max_abs(raw);
  return out;
}

WeightBias measure_weight_bias(const PromptInstance& prompt, const WeightScheme& scheme, std::size_t n_rollouts,
                               std::size_t batches, std::uint64_t seed) {
  const double p = exact_pass_rate(prompt);
  const double w_exact = pointwise_weight(scheme, p);
  const auto target_grad = exact_pass_rate_gradient(prompt);
  const auto m = prompt.num_responses();

  WeightBias out;
  out.empirical_bias.assign(m, 0.0);
  out.fixed_bias.assign(m, 0.0);
  Rng rng = make_stream(seed, {0x62696173u});
  for (std::size_t b = 0; b < batches; ++b) {
    const auto batch = sample_rollouts(prompt, n_rollouts, rng);
    if (!batch.active()) continue;
    ++out.active_batches;
    const auto ge = per_prompt_gradient(prompt, batch, pointwise_weight(scheme, batch.empirical_pass_rate));
    const auto gf = per_prompt_gradient(prompt, batch, w_exact);
    for (std::size_t j = 0; j < m; ++j) {
      out.empirical_bias[j] += ge[j];
      out.fixed_bias[j] += gf[j];
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double target = w_exact * target_grad[j];
    out.empirical_bias[j] = out.empirical_bias[j] / static_cast<double>(batches) - target;
    out.fixed_bias[j] = out.fixed_bias[j] / static_cast<double>(batches) - target;
  }
  return out;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(PromptPopulation population, TrainConfig config)
    : population_(std::move(population)), config_(std::move(config)), window_(config_.t0, config_.batch_size) {
  validate(config_);
  validate(population_);
  if (population_.size() == 0) throw std::invalid_argument("trainer needs a nonempty population");
}

StepLog Trainer::step() {
  const std::int64_t t = next_step_++;
  const auto n = config_.n_rollouts;
  const auto m = population_.m;
  const auto batch_size = config_.batch_size;

  StepLog log;
  log.step = t;
  log.scheme = scheme_name(config_.scheme);

  // Reference from the lagged window, before this step's rates are added.
  WeightScheme scheme = config_.scheme;
  if (uses_reference(scheme) && !scheme_reference(scheme)) {
    if (window_.size() >= config_.min_window_count) {
      log.reference = std::make_shared<const ReferenceDistribution>(*estimate(window_, n));
      scheme = with_reference(std::move(scheme), log.reference);
    } else {
      log.cold_start = true;
      logger()->debug("step {}: cold start with {} window entries", t, window_.size());
    }
  }

  // Batch from d_0, rollouts, weights, per-prompt gradients.
  Rng batch_rng = make_stream(config_.seed, {static_cast<std::uint64_t>(t), kBatchStream});
  std::discrete_distribution<std::size_t> pick(population_.base_weights.begin(), population_.base_weights.end());
  std::vector<double> grad(population_.size() * m, 0.0);
  std::vector<double> active_rates;
  active_rates.reserve(batch_size);
  log.per_prompt.reserve(batch_size);
  double weight_sum = 0.0;

  for (std::size_t slot = 0; slot < batch_size; ++slot) {
    const auto x = pick(batch_rng);
    const auto& prompt = population_.prompts[x];
    Rng rollout_rng = make_stream(config_.seed, {static_cast<std::uint64_t>(t), kRolloutStream, slot});
    const auto batch = sample_rollouts(prompt, n, rollout_rng);

    PromptStepRecord rec;
    rec.prompt_id = prompt.id;
    rec.p_hat = batch.empirical_pass_rate;
    if (batch.active()) {
      const double arg =
          config_.weight_argument == WeightArgument::Empirical ? batch.empirical_pass_rate : exact_pass_rate(prompt);
      rec.active = true;
      rec.weight = pointwise_weight(scheme, arg);
      const auto g = per_prompt_gradient(prompt, batch, rec.weight);
      rec.grad_norm = l2(g);
      for (std::size_t j = 0; j < m; ++j) grad[x * m + j] += g[j];
      active_rates.push_back(batch.empirical_pass_rate);
      weight_sum += rec.weight;
    }
    log.per_prompt.push_back(rec);
  }

  // Plain ascent on the batch-averaged gradient.
  for (auto& g : grad) g /= static_cast<double>(batch_size);
  for (std::size_t x = 0; x < population_.size(); ++x) {
    auto& logits = population_.prompts[x].logits;
    for (std::size_t j = 0; j < m; ++j) logits[j] += config_.learning_rate * grad[x * m + j];
  }

  // Window maintenance.
  window_.push_batch(t, active_rates);

  // Diagnostics.
  log.grad_norm = l2(grad);
  log.active_fraction = static_cast<double>(active_rates.size()) / static_cast<double>(batch_size);
  log.z_theta = active_rates.empty() ? 0.0 : weight_sum / static_cast<double>(active_rates.size());
  log.window_size = window_.size();
  log.mean_exact_pass_rate = mean_exact_pass_rate(population_);
  log.relative_multiplier.reserve(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(n);
    log.relative_multiplier.push_back(p * pointwise_weight(scheme, p));
  }
  return log;
}

void Trainer::run(const std::function<void(const StepLog&)>& on_step) {
  while (next_step_ < static_cast<std::int64_t>(config_.steps)) {
    const auto log = step();
    if (on_step) on_step(log);
  }
}

}  // namespace curverl
