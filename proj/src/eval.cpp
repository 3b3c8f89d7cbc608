#include "curverl/eval.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "curverl/csv.hpp"

namespace curverl {

double EvalSampleSet::mean_reward() const noexcept {
  if (rewards.empty()) return 0.0;
  std::size_t c = 0;
  for (auto r : rewards) c += r;
  return static_cast<double>(c) / static_cast<double>(rewards.size());
}

EvalSampleSet sample_eval_set(const PromptInstance& prompt, std::size_t rollouts, Rng& rng) {
  const auto batch = sample_rollouts(prompt, rollouts, rng);
  return {prompt.id, batch.rewards, batch.responses};
}

double pass_at_k(const EvalSampleSet& samples, std::size_t k, std::size_t resamples, Rng& rng) {
  const auto r = samples.size();
  if (k == 0 || k > r) {
    throw std::invalid_argument("pass_at_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(r) + "]");
  }
  if (k == 1) return samples.mean_reward();
  if (resamples == 0) throw std::invalid_argument("pass_at_k: resamples must be positive");

  std::size_t correct = 0;
  for (auto v : samples.rewards) correct += v;
  if (correct == 0) return 0.0;
  if (correct == r) return 1.0;

  std::uniform_int_distribution<std::size_t> index(0, r - 1);
  std::size_t hits = 0;
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < k; ++i) {
      if (samples.rewards[index(rng)] != 0) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(resamples);
}

double pass_at_k_exact(const EvalSampleSet& samples, std::size_t k) {
  const auto r = samples.size();
  if (k == 0 || k > r) throw std::invalid_argument("pass_at_k_exact: k outside [1, R]");
  std::size_t c = 0;
  for (auto v : samples.rewards) c += v;
  if (r - c < k) return 1.0;
  double miss = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    miss *= static_cast<double>(r - c - i) / static_cast<double>(r - i);
  }
  return 1.0 - miss;
}

int majority_at_k(const EvalSampleSet& samples, std::size_t k, std::span<const std::size_t> correct) {
  if (k == 0 || k > samples.answers.size()) throw std::invalid_argument("majority_at_k: k outside [1, R]");
  std::map<std::size_t, std::size_t> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[samples.answers[i]];
  // std::map iterates in ascending answer order, so strict > keeps the smallest tie.
  std::size_t best = 0, best_count = 0;
  for (const auto& [answer, count] : votes) {
    if (count > best_count) {
      best = answer;
      best_count = count;
    }
  }
  return std::find(correct.begin(), correct.end(), best) != correct.end() ? 1 : 0;
}

DifficultyCounts difficulty_histogram(std::span<const double> pass_rates) {
  DifficultyCounts out;
  for (double p : pass_rates) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("difficulty_histogram: rate outside [0, 1]");
    if (p == 0.0) ++out.unsolvable;
    else if (p <= 0.5) ++out.hard;
    else if (p < 1.0) ++out.medium;
    else ++out.easy;
  }
  return out;
}

void validate(const EvalSpec& spec) {
  if (spec.rollouts == 0) throw std::invalid_argument("eval.rollouts must be positive");
  if (spec.resamples == 0) throw std::invalid_argument("eval.resamples must be positive");
  if (spec.k_values.empty()) throw std::invalid_argument("eval.k must list at least one value");
  for (auto k : spec.k_values) {
    if (k == 0 || k > spec.rollouts) throw std::invalid_argument("eval.k values must lie in [1, rollouts]");
  }
}

EvalReport evaluate_population(const PromptPopulation& population, const EvalSpec& spec) {
  validate(spec);
  EvalReport report;
  report.k_values = spec.k_values;
  report.mean_pass_at_k.assign(spec.k_values.size(), 0.0);
  std::vector<double> empirical;
  empirical.reserve(population.size());
  std::size_t unsolved = 0;
  double majority = 0.0;
  const double threshold = 1.0 / static_cast<double>(spec.rollouts);

  for (std::size_t x = 0; x < population.size(); ++x) {
    const auto& prompt = population.prompts[x];
    Rng pool_rng = make_stream(spec.seed, {x, 0x706f6f6cu});
    const auto samples = sample_eval_set(prompt, spec.rollouts, pool_rng);
    Rng boot_rng = make_stream(spec.seed, {x, 0x626f6f74u});
    for (std::size_t i = 0; i < spec.k_values.size(); ++i) {
      report.mean_pass_at_k[i] += pass_at_k(samples, spec.k_values[i], spec.resamples, boot_rng);
    }
    majority += majority_at_k(samples, spec.rollouts, prompt.correct);
    empirical.push_back(samples.mean_reward());
    if (exact_pass_rate(prompt) < threshold) ++unsolved;
  }
  const auto count = static_cast<double>(population.size());
  for (auto& v : report.mean_pass_at_k) v /= count;
  report.mean_majority = majority / count;
  report.buckets = difficulty_histogram(empirical);
  report.unsolved_fraction = static_cast<double>(unsolved) / count;
  return report;
}

void write_passk_csv(std::ostream& out, const std::string& scheme, const EvalReport& report, bool header) {
  if (header) out << "scheme,k,mean_pass_at_k\n";
  for (std::size_t i = 0; i < report.k_values.size(); ++i) {
    out << scheme << ',' << report.k_values[i] << ',' << format_double(report.mean_pass_at_k[i]) << '\n';
  }
}

void write_bucket_csv(std::ostream& out, const std::string& scheme, const EvalReport& report, bool header) {
  if (header) out << "scheme,bucket,count\n";
  out << scheme << ",unsolvable," << report.buckets.unsolvable << '\n';
  out << scheme << ",hard," << report.buckets.hard << '\n';
  out << scheme << ",medium," << report.buckets.medium << '\n';
  out << scheme << ",easy," << report.buckets.easy << '\n';
}

}  // namespace curverl
