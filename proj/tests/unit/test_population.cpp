#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "curverl/population.hpp"
#include "support/oracles.hpp"

using namespace curverl;
using Catch::Matchers::WithinAbs;

TEST_CASE("logit offset hits the target pass rate", "[population]") {
  Rng rng = make_stream(1, {2});
  std::uniform_real_distribution<double> target(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto prompt = testing::random_solvable_prompt(rng, 16, 3.0);
    for (double t : {1e-6, 0.01, target(rng), 0.5, 0.99, 1.0 - 1e-6}) {
      const auto moved = with_pass_rate(prompt, t);
      CHECK_THAT(exact_pass_rate(moved), WithinAbs(t, 1e-9));
      for (std::size_t j = 0; j < prompt.logits.size(); ++j) {
        if (!prompt.is_correct(j)) CHECK(moved.logits[j] == prompt.logits[j]);
      }
    }
  }
}

TEST_CASE("logit offset preconditions", "[population]") {
  PromptInstance p;
  p.logits = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(solve_logit_offset(p, 0.5), std::invalid_argument);
  p.correct = {0, 1, 2};
  CHECK_THROWS_AS(solve_logit_offset(p, 0.5), std::invalid_argument);
  p.correct = {1};
  CHECK_THROWS_AS(solve_logit_offset(p, 0.0), std::domain_error);
  CHECK_THROWS_AS(solve_logit_offset(p, 1.0), std::domain_error);
}

TEST_CASE("generated population has the requested shape", "[population]") {
  PopulationSpec spec;
  spec.size = 500;
  spec.m = 16;
  spec.difficulty = {DifficultyProfile::Kind::Beta, 1.0, 5.0, 0.5};
  spec.unsolvable_fraction = 0.1;
  spec.seed = 3;
  const auto pop = generate_population(spec);
  REQUIRE(pop.size() == 500);
  CHECK(pop.m == 16);
  CHECK_THAT(std::accumulate(pop.base_weights.begin(), pop.base_weights.end(), 0.0), WithinAbs(1.0, 1e-12));

  std::size_t empty = 0;
  double mean = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& p = pop.prompts[i];
    CHECK(p.id == static_cast<std::int64_t>(i));
    CHECK(p.logits.size() == 16);
    if (p.correct.empty()) {
      ++empty;
      CHECK(exact_pass_rate(p) == 0.0);
    } else {
      CHECK(p.correct.size() == 1);
      mean += exact_pass_rate(p);
    }
  }
  CHECK(empty == 50);
  // Beta(1,5) has mean 1/6; 450 draws give a standard error near 0.0067.
  CHECK_THAT(mean / 450.0, WithinAbs(1.0 / 6.0, 0.03));
}

TEST_CASE("constant difficulty pins every solvable pass rate", "[population]") {
  PopulationSpec spec;
  spec.size = 50;
  spec.difficulty = {DifficultyProfile::Kind::Constant, 1.0, 1.0, 0.3};
  spec.correct_count = 3;
  const auto pop = generate_population(spec);
  for (const auto& p : pop.prompts) {
    CHECK(p.correct.size() == 3);
    CHECK_THAT(exact_pass_rate(p), WithinAbs(0.3, 1e-9));
  }
}

TEST_CASE("generation is a function of the seed", "[population]") {
  PopulationSpec spec;
  spec.size = 30;
  spec.seed = 17;
  const auto a = population_to_json(generate_population(spec));
  const auto b = population_to_json(generate_population(spec));
  spec.seed = 18;
  const auto c = population_to_json(generate_population(spec));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("generation rejects bad specs", "[population]") {
  PopulationSpec spec;
  spec.size = 0;
  CHECK_THROWS(generate_population(spec));
  spec = {};
  spec.m = 1;
  CHECK_THROWS(generate_population(spec));
  spec = {};
  spec.correct_count = 16;
  CHECK_THROWS(generate_population(spec));
  spec = {};
  spec.unsolvable_fraction = 1.5;
  CHECK_THROWS(generate_population(spec));
}

TEST_CASE("population JSON round trip is bit exact", "[population]") {
  PopulationSpec spec;
  spec.size = 40;
  spec.unsolvable_fraction = 0.25;
  spec.seed = 5;
  auto pop = generate_population(spec);
  pop.prompts[0].logits[0] = 0.1 + 0.2;
  pop.prompts[1].logits[1] = 1e-300;
  pop.prompts[2].logits[2] = -std::nextafter(1.0, 2.0);

  const auto back = population_from_json(population_to_json(pop));
  REQUIRE(back.size() == pop.size());
  CHECK(back.m == pop.m);
  CHECK(back.base_weights == pop.base_weights);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    CHECK(back.prompts[i].id == pop.prompts[i].id);
    CHECK(back.prompts[i].logits == pop.prompts[i].logits);
    CHECK(back.prompts[i].correct == pop.prompts[i].correct);
  }
  CHECK(population_to_json(back) == population_to_json(pop));

  const auto path = std::filesystem::temp_directory_path() / "curverl_population_roundtrip.json";
  save_population(pop, path);
  CHECK(population_to_json(load_population(path)) == population_to_json(pop));
  std::filesystem::remove(path);
}

TEST_CASE("population JSON rejects invalid documents", "[population]") {
  CHECK_THROWS(population_from_json("{\"m\": 2, \"prompts\": []}"));
  CHECK_THROWS(population_from_json(
      R"({"m": 2, "prompts": [{"id": 0, "logits": [0, 0], "correct": [0]}], "base_weights": [0.5]})"));
  CHECK_THROWS(population_from_json(
      R"({"m": 3, "prompts": [{"id": 0, "logits": [0, 0], "correct": [0]}], "base_weights": [1.0]})"));
  CHECK_NOTHROW(population_from_json(
      R"({"m": 2, "prompts": [{"id": 0, "logits": [0, 0], "correct": [0]}], "base_weights": [1.0]})"));
}
