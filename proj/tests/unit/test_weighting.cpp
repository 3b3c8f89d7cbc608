#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "curverl/population.hpp"
#include "curverl/quadrature.hpp"
#include "curverl/weighting.hpp"
#include "support/oracles.hpp"

using namespace curverl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> grid19() {
  std::vector<double> g;
  for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
  return g;
}

ReferenceHandle histogram_handle(std::vector<double> masses, std::size_t samples = 100) {
  const auto n = masses.size() + 1;
  return std::make_shared<const ReferenceDistribution>(ReferenceDistribution::from_masses(n, std::move(masses), samples));
}

}  // namespace

TEST_CASE("pointwise weights on hand examples", "[weighting]") {
  CHECK(pointwise_weight(Reinforce{}, 0.3) == 1.0);
  CHECK(pointwise_weight(Grpo{}, 0.5) == 2.0);
  CHECK(pointwise_weight(MaxRL{}, 0.25) == 4.0);
  CHECK_THAT(pointwise_weight(EntropicRisk{1e-4}, 0.3), WithinAbs(1.0, 1e-4));
  CHECK_THAT(50.0 * pointwise_weight(EntropicRisk{50.0}, 0.5), WithinAbs(2.0, 1e-3));
  CHECK(pointwise_weight(Curve{uniform_reference()}, 0.2) == 5.0);
  CHECK(pointwise_weight(Curve{uniform_reference()}, 0.2) == pointwise_weight(MaxRL{}, 0.2));
}

TEST_CASE("weights reject rates outside (0,1)", "[weighting]") {
  for (const WeightScheme& s : std::vector<WeightScheme>{Reinforce{}, Grpo{}, MaxRL{}, EntropicRisk{1.0},
                                                         Curve{uniform_reference()}}) {
    CHECK_THROWS_AS(pointwise_weight(s, 0.0), std::domain_error);
    CHECK_THROWS_AS(pointwise_weight(s, 1.0), std::domain_error);
    CHECK_THROWS_AS(pointwise_weight(s, std::nan("")), std::domain_error);
  }
}

TEST_CASE("scheme validation and metadata", "[weighting]") {
  CHECK_THROWS(validate(WeightScheme{EntropicRisk{0.0}}));
  CHECK_THROWS(validate(WeightScheme{EntropicRisk{-1.0}}));
  CHECK_THROWS(validate(WeightScheme{IntegratedConvex{1.5, nullptr}}));
  CHECK_NOTHROW(validate(WeightScheme{IntegratedConvex{0.0, nullptr}}));
  CHECK(scheme_name(Grpo{}) == "grpo");
  CHECK(scheme_name(IntegratedProduct{}) == "integrated_product");
  CHECK(uses_reference(Curve{}));
  CHECK_FALSE(uses_reference(MaxRL{}));
  const auto ref = uniform_reference();
  CHECK(scheme_reference(with_reference(Curve{}, ref)) == ref);
  CHECK(scheme_reference(with_reference(Grpo{}, ref)) == nullptr);
}

TEST_CASE("cold start reference is uniform", "[weighting]") {
  for (int i = 1; i < 100; ++i) {
    const double p = i / 100.0;
    CHECK(pointwise_weight(Curve{}, p) == pointwise_weight(MaxRL{}, p));
    CHECK_THAT(pointwise_weight(IntegratedConvex{0.3, nullptr}, p),
               Catch::Matchers::WithinRel(pointwise_weight(MaxRL{}, p), 1e-15));
  }
}

TEST_CASE("integrated schemes follow their formulas", "[weighting]") {
  const auto ref = truncated_exponential_reference(4.0);
  for (int i = 1; i < 20; ++i) {
    const double p = i / 20.0;
    const double hazard = ref->density(p) / ref->cdf(p);
    CHECK_THAT(pointwise_weight(Curve{ref}, p), WithinRel(hazard, 1e-14));
    CHECK_THAT(pointwise_weight(IntegratedConvex{0.25, ref}, p), WithinRel(0.75 / p + 0.25 * hazard, 1e-14));
    CHECK_THAT(pointwise_weight(IntegratedProduct{ref}, p),
               WithinRel(-(std::log(ref->cdf(p)) / p + hazard * std::log(p)), 1e-14));
    CHECK(pointwise_weight(IntegratedProduct{ref}, p) > 0.0);
  }
  CHECK(pointwise_weight(IntegratedConvex{0.0, ref}, 0.3) == pointwise_weight(MaxRL{}, 0.3));
  CHECK_THAT(pointwise_weight(IntegratedConvex{1.0, ref}, 0.3), WithinRel(pointwise_weight(Curve{ref}, 0.3), 1e-15));
}

TEST_CASE("histogram reference weights are density over cdf", "[weighting]") {
  const auto ref = histogram_handle({4, 3, 2, 1, 1, 1, 1});
  const auto& h = static_cast<const ReferenceDistribution&>(*ref);
  for (std::size_t k = 1; k < 8; ++k) {
    const double p = k / 8.0;
    CHECK(pointwise_weight(Curve{ref}, p) == h.floored_density()[k - 1] / h.floored_cdf()[k - 1]);
  }
}

TEST_CASE("induced priors in closed form", "[weighting][theorem1]") {
  CHECK_THAT(induced_prior(Reinforce{}, 0.0), WithinAbs(std::exp(-1.0), 1e-15));
  CHECK(induced_prior(MaxRL{}, 0.7) == 0.7);
  CHECK_THAT(induced_prior(Grpo{}, 0.5), WithinAbs(std::exp(-std::numbers::pi / 2.0), 1e-15));
  for (const WeightScheme& s : std::vector<WeightScheme>{Reinforce{}, Grpo{}, MaxRL{}}) {
    CHECK_THAT(induced_prior(s, 1.0), WithinAbs(1.0, 1e-15));
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double v = induced_prior(s, i / 100.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
  CHECK_THROWS_AS(induced_prior(MaxRL{}, 0.0), std::domain_error);
  CHECK_THROWS_AS(induced_prior(Curve{}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(induced_prior(Reinforce{}, 1.5), std::domain_error);
}

TEST_CASE("quadrature priors match closed forms", "[weighting][theorem1][oracle]") {
  for (const WeightScheme& s : std::vector<WeightScheme>{Reinforce{}, Grpo{}, MaxRL{}}) {
    const auto w = pointwise_weight_function(s);
    for (double p : grid19()) {
      CHECK_THAT(induced_prior_quadrature(w, p), WithinAbs(induced_prior(s, p), 1e-6));
    }
  }
  CHECK_THAT(tail_integral(pointwise_weight_function(Grpo{}), 0.0), WithinAbs(std::numbers::pi, 1e-7));
  CHECK_THROWS_AS(tail_integral(pointwise_weight_function(MaxRL{}), 0.0), DivergenceError);
}

TEST_CASE("reverse hazard identity", "[weighting][theorem1][oracle]") {
  CHECK(reverse_hazard_residual(MaxRL{}, 0.5, 1e-5) < 1e-6);
  CHECK(reverse_hazard_residual(Grpo{}, 0.5, 1e-5) < 1e-4);
  CHECK(reverse_hazard_residual(Reinforce{}, 0.9, 1e-5) < 1e-6);
  for (const WeightScheme& s : std::vector<WeightScheme>{Reinforce{}, Grpo{}, MaxRL{}}) {
    for (double p : grid19()) CHECK(reverse_hazard_residual(s, p, 1e-5) < 1e-4);
  }
}

TEST_CASE("entropic weight limits and monotonicity", "[weighting][prop1]") {
  double small = 0.0, large = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const double p = 0.1 * i;
    small = std::max(small, std::abs(entropic_weight(1e-4, p) - 1.0));
    large = std::max(large, std::abs(50.0 * entropic_weight(50.0, p) - 1.0 / p));
  }
  CHECK(small < 1e-4);
  CHECK(large < 1e-3);

  for (double eta : {1e-3, 0.5, 2.0, 10.0, 100.0, 1000.0}) {
    double prev = entropic_weight(eta, 1e-4);
    for (int i = 2; i < 1000; ++i) {
      const double cur = entropic_weight(eta, i / 1000.0);
      CHECK(cur < prev);
      CHECK(std::isfinite(cur));
      prev = cur;
    }
  }
  // Closed form where it is safe to evaluate directly.
  for (double p : {0.1, 0.5, 0.9}) {
    const double eta = 3.0;
    const double direct = std::expm1(eta) / (eta * (1.0 + std::expm1(eta) * p));
    CHECK_THAT(entropic_weight(eta, p), WithinRel(direct, 1e-13));
  }
  CHECK_THAT(entropic_weight(800.0, 0.5), WithinRel(1.0 / 400.0, 1e-13));
}

TEST_CASE("distortion functions", "[weighting]") {
  const auto log = DistortionFunction::log();
  const auto id = DistortionFunction::identity();
  const auto clip = DistortionFunction::clipped_log(1e-3);
  CHECK_FALSE(log.lipschitz().has_value());
  CHECK(*id.lipschitz() == 1.0);
  CHECK_THAT(*clip.lipschitz(), WithinRel(1000.0, 1e-15));
  CHECK(clip(1e-5) == std::log(1e-3));
  CHECK(clip(0.5) == std::log(0.5));
  CHECK(clip.derivative(1e-5) == 0.0);
  CHECK(log.derivative(0.25) == 4.0);
  for (double u : {0.01, 0.2, 0.7}) {
    for (const auto& g : {log, id, clip}) {
      CHECK_THAT(g.derivative(u), WithinRel(testing::central_difference([&](double x) { return g(x); }, u, 1e-7), 1e-6));
    }
  }
}

TEST_CASE("pointwise and distribution utilities", "[weighting]") {
  const std::vector<double> uni{0.5, 0.5};
  const std::vector<double> a{0.2, 0.8};
  CHECK_THAT(pointwise_utility(DistortionFunction::identity(), a, uni), WithinAbs(0.5, 1e-15));
  const std::vector<double> ones{1.0, 1.0};
  CHECK(pointwise_utility(DistortionFunction::log(), ones, uni) == 0.0);
  const std::vector<double> b{0.5, 0.25};
  CHECK_THAT(pointwise_utility(DistortionFunction::log(), b, uni), WithinAbs(-1.0397207708399179, 1e-12));
  const std::vector<double> zero{0.0, 0.5};
  CHECK_THROWS_AS(pointwise_utility(DistortionFunction::log(), zero, uni), std::domain_error);

  Rng rng = make_stream(5, {1});
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> rates(40), w(40, 1.0 / 40.0);
  for (auto& r : rates) r = u(rng);
  CHECK_THAT(distribution_utility(DistortionFunction::log(), *uniform_reference(), rates, w),
             WithinAbs(pointwise_utility(DistortionFunction::log(), rates, w), 1e-12));

  const std::vector<double> single{1.0};
  const std::vector<double> one{1.0};
  CHECK(distribution_utility(DistortionFunction::log(), *beta_reference(2, 2), single, one) == 0.0);
}

TEST_CASE("probability integral transform makes identity utility uninformative", "[weighting]") {
  Rng rng = make_stream(6, {1});
  std::uniform_int_distribution<int> k(1, 63);
  std::vector<double> rates(5000), w(5000, 1.0 / 5000.0);
  for (auto& r : rates) r = k(rng) / 64.0;
  const auto own = histogram_from_rates(rates, w, 64);
  CHECK_THAT(distribution_utility(DistortionFunction::identity(), own, rates, w), WithinAbs(0.5, 2.0 / 64.0));
}

TEST_CASE("utility gap bound", "[weighting][prop2]") {
  SECTION("identical reference") {
    const std::vector<double> rates{0.25, 0.5, 0.5, 0.75};
    const std::vector<double> w(4, 0.25);
    const auto own = histogram_from_rates(rates, w, 8);
    const auto g = utility_gap_bound(DistortionFunction::identity(), rates, w, own);
    CHECK(g.gap == 0.0);
    CHECK(g.bound == 0.0);
    CHECK(g.holds());
  }
  SECTION("shifted by one bin on random populations") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      PopulationSpec spec;
      spec.size = 30;
      spec.seed = seed;
      const auto pop = generate_population(spec);
      const auto rates = exact_pass_rates(pop);
      const auto own = exact_policy_distribution(pop, 8);
      std::vector<double> shifted(7, 0.0);
      for (std::size_t k = 0; k < 7; ++k) shifted[std::min<std::size_t>(k + 1, 6)] += own.bin_mass()[k];
      const auto ref = ReferenceDistribution::from_masses(8, shifted, pop.size());
      for (const auto& psi : {DistortionFunction::identity(), DistortionFunction::clipped_log(1e-3)}) {
        const auto g = utility_gap_bound(psi, rates, pop.base_weights, ref);
        CHECK(g.holds());
        CHECK(g.slack == 0.25);
      }
    }
  }
  SECTION("degenerate rates") {
    const std::vector<double> rates(10, 0.375);
    const std::vector<double> w(10, 0.1);
    const auto ref = ReferenceDistribution::from_masses(8, {1, 1, 1, 1, 1, 1, 1}, 70);
    CHECK(utility_gap_bound(DistortionFunction::identity(), rates, w, ref).holds());
    CHECK(utility_gap_bound(DistortionFunction::clipped_log(), rates, w, ref).holds());
  }
  SECTION("plain log is rejected") {
    const std::vector<double> rates{0.5};
    const std::vector<double> w{1.0};
    CHECK_THROWS_AS(utility_gap_bound(DistortionFunction::log(), rates, w, ReferenceDistribution::uniform_grid(8)),
                    std::invalid_argument);
  }
}

TEST_CASE("relative multiplier", "[weighting][aggressiveness]") {
  const auto log = DistortionFunction::log();
  for (int i = 1; i < 20; ++i) CHECK_THAT(relative_multiplier(log, *uniform_reference(), i / 20.0), WithinAbs(1.0, 1e-15));
  const auto te = truncated_exponential_reference(4.0);
  const auto rte = reflected_truncated_exponential_reference(4.0);
  CHECK(relative_multiplier(log, *te, 0.2) > relative_multiplier(log, *te, 0.8));
  CHECK(relative_multiplier(log, *rte, 0.2) < relative_multiplier(log, *rte, 0.8));
  for (std::size_t k = 2; k < 8; ++k) {
    const double p = k / 8.0, q = (k - 1) / 8.0;
    CHECK(relative_multiplier(log, *te, p) < relative_multiplier(log, *te, q));
    CHECK(relative_multiplier(log, *rte, p) > relative_multiplier(log, *rte, q));
  }
  CHECK_THROWS_AS(relative_multiplier(DistortionFunction::clipped_log(0.1), *te, 0.05), std::domain_error);
}

TEST_CASE("variance utility weight changes sign", "[weighting]") {
  CHECK(variance_utility_weight(0.2, 0.5) < 0.0);
  CHECK(variance_utility_weight(0.8, 0.5) > 0.0);
  CHECK(variance_utility_weight(0.5, 0.5) == 0.0);
}

TEST_CASE("weight tables", "[weighting]") {
  const auto grpo = weight_table(Grpo{}, 8);
  REQUIRE(grpo.size() == 7);
  double total = 0.0;
  for (std::size_t k = 0; k < 7; ++k) {
    CHECK(grpo[k].p == (k + 1) / 8.0);
    CHECK_THAT(grpo[k].weight, WithinRel(grpo[6 - k].weight, 1e-14));
    total += grpo[k].normalized_weight;
  }
  CHECK_THAT(total, WithinAbs(1.0, 1e-14));

  const auto maxrl = weight_table(MaxRL{}, 16);
  for (std::size_t k = 1; k < maxrl.size(); ++k) CHECK(maxrl[k].weight < maxrl[k - 1].weight);

  std::ostringstream out;
  write_weight_csv(out, grpo);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "scheme,p,weight,normalized_weight");
  std::getline(in, line);
  CHECK(line.rfind("grpo,0.125,", 0) == 0);
  CHECK_THROWS(weight_table(Grpo{}, 1));
}
