#include "curverl/passrate_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace curverl {

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (tags.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto t : tags) push(t);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

bool PromptInstance::is_correct(std::size_t response) const noexcept {
  return std::binary_search(correct.begin(), correct.end(), response);
}

void validate(const PromptInstance& prompt) {
  const auto m = prompt.logits.size();
  if (m < 2) {
    throw std::invalid_argument("prompt " + std::to_string(prompt.id) + ": need at least 2 responses");
  }
  for (double v : prompt.logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("prompt " + std::to_string(prompt.id) + ": non-finite logit");
    }
  }
  for (std::size_t i = 0; i < prompt.correct.size(); ++i) {
    if (prompt.correct[i] >= m) {
      throw std::invalid_argument("prompt " + std::to_string(prompt.id) + ": correct index out of range");
    }
    if (i > 0 && prompt.correct[i] <= prompt.correct[i - 1]) {
      throw std::invalid_argument("prompt " + std::to_string(prompt.id) +
                                  ": correct set must be sorted and unique");
    }
  }
}

void validate(const PromptPopulation& population) {
  if (population.base_weights.size() != population.prompts.size()) {
    throw std::invalid_argument("base_weights must have one entry per prompt");
  }
  double total = 0.0;
  for (double w : population.base_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("base_weights must be nonnegative");
    total += w;
  }
  if (!population.prompts.empty() && std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("base_weights must sum to 1");
  }
  for (const auto& p : population.prompts) {
    validate(p);
    if (p.logits.size() != population.m) {
      throw std::invalid_argument("prompt " + std::to_string(p.id) + ": logits length differs from m");
    }
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double hi = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (auto& v : out) {
    v = std::exp(v - hi);
    z += v;
  }
  for (auto& v : out) v /= z;
  return out;
}

double exact_pass_rate(const PromptInstance& prompt) {
  if (prompt.correct.empty()) return 0.0;
  const auto pi = softmax(prompt.logits);
  double p = 0.0;
  for (auto j : prompt.correct) p += pi[j];
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> exact_pass_rate_gradient(const PromptInstance& prompt) {
  std::vector<double> grad(prompt.logits.size(), 0.0);
  if (prompt.correct.empty()) return grad;
  const auto pi = softmax(prompt.logits);
  double p = 0.0;
  for (auto j : prompt.correct) p += pi[j];
  for (std::size_t j = 0; j < grad.size(); ++j) {
    grad[j] = pi[j] * ((prompt.is_correct(j) ? 1.0 : 0.0) - p);
  }
  return grad;
}

RolloutBatch sample_rollouts(const PromptInstance& prompt, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_rollouts: n must be positive");
  const auto pi = softmax(prompt.logits);
  std::discrete_distribution<std::size_t> pick(pi.begin(), pi.end());

  RolloutBatch batch;
  batch.prompt_id = prompt.id;
  batch.rewards.resize(n);
  batch.responses.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = pick(rng);
    batch.responses[i] = y;
    batch.rewards[i] = prompt.is_correct(y) ? 1 : 0;
    batch.num_correct += batch.rewards[i];
  }
  batch.empirical_pass_rate = static_cast<double>(batch.num_correct) / static_cast<double>(n);
  return batch;
}

std::vector<double> score_vector(const PromptInstance& prompt, std::size_t response) {
  if (response >= prompt.logits.size()) {
    throw std::out_of_range("score_vector: response " + std::to_string(response) + " out of range");
  }
  auto s = softmax(prompt.logits);
  for (auto& v : s) v = -v;
  s[response] += 1.0;
  return s;
}

std::vector<double> exact_pass_rates(const PromptPopulation& population) {
  std::vector<double> rates;
  rates.reserve(population.size());
  for (const auto& p : population.prompts) rates.push_back(exact_pass_rate(p));
  return rates;
}

double mean_exact_pass_rate(const PromptPopulation& population) {
  double acc = 0.0;
  for (std::size_t i = 0; i < population.size(); ++i) {
    acc += population.base_weights[i] * exact_pass_rate(population.prompts[i]);
  }
  return acc;
}

}  // namespace curverl
