#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curverl/passrate_model.hpp"

namespace curverl {

/// Target distribution of initial pass rates for solvable prompts.
struct DifficultyProfile {
  enum class Kind { Beta, Constant };
  Kind kind = Kind::Beta;
  double alpha = 2.0;
  double beta = 2.0;
  double value = 0.5;  // Constant only
};

struct PopulationSpec {
  std::size_t size = 100;
  std::size_t m = 16;
  DifficultyProfile difficulty;
  /// Share of prompts generated with an empty correct set.
  double unsolvable_fraction = 0.0;
  std::size_t correct_count = 1;
  std::uint64_t seed = 0;
};

/// Offset c such that adding c to every correct logit yields exact pass rate
/// `target` (within 1e-9). Solved on the logit scale with a closed-form start
/// and Newton polish. Requires a nonempty correct set and a proper subset.
double solve_logit_offset(const PromptInstance& prompt, double target);

/// Copy of `prompt` whose correct logits are shifted to hit `target`.
PromptInstance with_pass_rate(PromptInstance prompt, double target);

/// Uniform d_0. Unsolvable prompts are chosen as a random subset of exactly
/// round(size * unsolvable_fraction) prompts.
PromptPopulation generate_population(const PopulationSpec& spec);

std::string population_to_json(const PromptPopulation& population);
PromptPopulation population_from_json(const std::string& text);

void save_population(const PromptPopulation& population, const std::filesystem::path& path);
PromptPopulation load_population(const std::filesystem::path& path);

}  // namespace curverl
