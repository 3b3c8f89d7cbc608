#include "curverl/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace curverl {
namespace {

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double draw_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace

double solve_logit_offset(const PromptInstance& prompt, double target) {
  const auto m = prompt.logits.size();
  if (prompt.correct.empty() || prompt.correct.size() == m) {
    throw std::invalid_argument("solve_logit_offset: correct set must be a nonempty proper subset");
  }
  if (!(target > 0.0 && target < 1.0)) {
    throw std::domain_error("solve_logit_offset: target must lie in (0, 1)");
  }
  std::vector<double> good, bad;
  for (std::size_t j = 0; j < m; ++j) {
    (prompt.is_correct(j) ? good : bad).push_back(prompt.logits[j]);
  }
  const double lg = log_sum_exp(good);
  const double lb = log_sum_exp(bad);
  // p(c) = sigmoid(c + lg - lb)
  double c = std::log(target) - std::log1p(-target) + lb - lg;
  for (int it = 0; it < 20; ++it) {
    const double z = c + lg - lb;
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double err = p - target;
    if (std::abs(err) < 1e-15) break;
    const double slope = p * (1.0 - p);
    if (slope <= 0.0) break;
    c -= err / slope;
  }
  return c;
}

PromptInstance with_pass_rate(PromptInstance prompt, double target) {
  const double c = solve_logit_offset(prompt, target);
  for (auto j : prompt.correct) prompt.logits[j] += c;
  return prompt;
}

PromptPopulation generate_population(const PopulationSpec& spec) {
  if (spec.size == 0) throw std::invalid_argument("population size must be positive");
  if (spec.m < 2) throw std::invalid_argument("m must be at least 2");
  if (spec.correct_count == 0 || spec.correct_count >= spec.m) {
    throw std::invalid_argument("correct_count must lie in [1, m)");
  }
  if (!(spec.unsolvable_fraction >= 0.0 && spec.unsolvable_fraction <= 1.0)) {
    throw std::invalid_argument("unsolvable_fraction must lie in [0, 1]");
  }

  Rng rng = make_stream(spec.seed, {0x706f70u});
  PromptPopulation pop;
  pop.m = spec.m;
  pop.prompts.reserve(spec.size);

  const auto n_unsolvable =
      static_cast<std::size_t>(std::llround(static_cast<double>(spec.size) * spec.unsolvable_fraction));
  std::vector<std::size_t> order(spec.size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> unsolvable(spec.size, false);
  for (std::size_t i = 0; i < n_unsolvable; ++i) unsolvable[order[i]] = true;

  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double kEdge = 1e-12;
  for (std::size_t i = 0; i < spec.size; ++i) {
    PromptInstance prompt;
    prompt.id = static_cast<std::int64_t>(i);
    prompt.logits.resize(spec.m);
    for (auto& v : prompt.logits) v = noise(rng);

    std::vector<std::size_t> responses(spec.m);
    std::iota(responses.begin(), responses.end(), std::size_t{0});
    std::shuffle(responses.begin(), responses.end(), rng);
    responses.resize(spec.correct_count);
    std::sort(responses.begin(), responses.end());

    double target = spec.difficulty.kind == DifficultyProfile::Kind::Beta
                        ? draw_beta(spec.difficulty.alpha, spec.difficulty.beta, rng)
                        : spec.difficulty.value;
    target = std::clamp(target, kEdge, 1.0 - kEdge);

    if (unsolvable[i]) {
      prompt.correct.clear();
    } else {
      prompt.correct = std::move(responses);
      prompt = with_pass_rate(std::move(prompt), target);
    }
    pop.prompts.push_back(std::move(prompt));
  }
  pop.base_weights.assign(spec.size, 1.0 / static_cast<double>(spec.size));
  // Renormalize so the sum is 1 to within rounding of a single division.
  const double total = std::accumulate(pop.base_weights.begin(), pop.base_weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    for (auto& w : pop.base_weights) w /= total;
  }
  validate(pop);
  return pop;
}

std::string population_to_json(const PromptPopulation& population) {
  nlohmann::ordered_json doc;
  doc["m"] = population.m;
  auto prompts = nlohmann::ordered_json::array();
  for (const auto& p : population.prompts) {
    nlohmann::ordered_json entry;
    entry["id"] = p.id;
    entry["logits"] = p.logits;
    entry["correct"] = p.correct;
    prompts.push_back(std::move(entry));
  }
  doc["prompts"] = std::move(prompts);
  doc["base_weights"] = population.base_weights;
  return doc.dump(2);
}

PromptPopulation population_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  PromptPopulation pop;
  pop.m = doc.at("m").get<std::size_t>();
  for (const auto& entry : doc.at("prompts")) {
    PromptInstance p;
    p.id = entry.at("id").get<std::int64_t>();
    p.logits = entry.at("logits").get<std::vector<double>>();
    p.correct = entry.at("correct").get<std::vector<std::size_t>>();
    pop.prompts.push_back(std::move(p));
  }
  pop.base_weights = doc.at("base_weights").get<std::vector<double>>();
  validate(pop);
  return pop;
}

void save_population(const PromptPopulation& population, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << population_to_json(population) << '\n';
}

PromptPopulation load_population(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return population_from_json(ss.str());
}

}  // namespace curverl
