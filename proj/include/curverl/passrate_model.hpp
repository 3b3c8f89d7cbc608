#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace curverl {

using Rng = std::mt19937_64;

/// Independent random stream derived from a root seed and a tag path
/// (e.g. {step, slot}). Streams with distinct tags do not share state.
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

/// A synthetic prompt: an independent softmax policy over M discrete
/// responses plus the set of responses the verifier accepts.
struct PromptInstance {
  std::int64_t id = 0;
  std::vector<double> logits;
  /// Sorted, unique response indices in [0, M). Empty means unsolvable.
  std::vector<std::size_t> correct;

  std::size_t num_responses() const noexcept { return logits.size(); }
  bool is_correct(std::size_t response) const noexcept;
};

/// Throws std::invalid_argument if M < 2, a logit is non-finite, or the
/// correct set is unsorted, duplicated, or out of range.
void validate(const PromptInstance& prompt);

struct PromptPopulation {
  std::size_t m = 16;
  std::vector<PromptInstance> prompts;
  /// Sampling distribution over prompts; sums to 1 within 1e-12.
  std::vector<double> base_weights;

  std::size_t size() const noexcept { return prompts.size(); }
};

void validate(const PromptPopulation& population);

/// N rollouts for one prompt at one step.
struct RolloutBatch {
  std::int64_t prompt_id = 0;
  std::vector<std::uint8_t> rewards;
  std::vector<std::size_t> responses;
  std::size_t num_correct = 0;
  /// num_correct / N, computed as a single division so grid values are exact.
  double empirical_pass_rate = 0.0;

  std::size_t size() const noexcept { return rewards.size(); }
  /// p-hat strictly inside (0, 1): the group carries a non-vanishing gradient.
  bool active() const noexcept { return num_correct > 0 && num_correct < rewards.size(); }
};

std::vector<double> softmax(std::span<const double> logits);

double exact_pass_rate(const PromptInstance& prompt);

/// d p / d logits. Component j is pi_j * (1{j correct} - p).
std::vector<double> exact_pass_rate_gradient(const PromptInstance& prompt);

RolloutBatch sample_rollouts(const PromptInstance& prompt, std::size_t n, Rng& rng);

/// Gradient of log pi(response) with respect to the logits.
/// Throws std::out_of_range for a response outside [0, M).
std::vector<double> score_vector(const PromptInstance& prompt, std::size_t response);

/// d_0-weighted mean of exact pass rates.
double mean_exact_pass_rate(const PromptPopulation& population);

std::vector<double> exact_pass_rates(const PromptPopulation& population);

}  // namespace curverl
