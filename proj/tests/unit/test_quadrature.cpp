#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "curverl/quadrature.hpp"

using namespace curverl;
using Catch::Matchers::WithinAbs;

TEST_CASE("smooth integrands", "[quadrature]") {
  CHECK_THAT(adaptive_trapezoid([](double t) { return t * t; }, 0.0, 1.0), WithinAbs(1.0 / 3.0, 1e-9));
  CHECK_THAT(adaptive_trapezoid([](double t) { return std::exp(t); }, -1.0, 2.0),
             WithinAbs(std::exp(2.0) - std::exp(-1.0), 1e-8));
  CHECK_THAT(adaptive_trapezoid([](double t) { return std::sin(t); }, 0.0, std::numbers::pi), WithinAbs(2.0, 1e-9));
}

TEST_CASE("inverse square root endpoint singularities", "[quadrature]") {
  CHECK_THAT(adaptive_trapezoid([](double t) { return 1.0 / std::sqrt(t); }, 0.0, 1.0), WithinAbs(2.0, 1e-7));
  CHECK_THAT(adaptive_trapezoid([](double t) { return 1.0 / std::sqrt(t * (1.0 - t)); }, 0.0, 1.0),
             WithinAbs(std::numbers::pi, 1e-7));
}

TEST_CASE("divergent integrals are reported", "[quadrature]") {
  CHECK_THROWS_AS(adaptive_trapezoid([](double t) { return 1.0 / (t * t); }, 0.0, 1.0), DivergenceError);
  CHECK_THROWS_AS(adaptive_trapezoid([](double) { return std::nan(""); }, 0.0, 1.0), DivergenceError);
  QuadratureOptions tight;
  tight.magnitude_cap = 1.0;
  CHECK_THROWS_AS(adaptive_trapezoid([](double) { return 5.0; }, 0.0, 1.0, tight), DivergenceError);
}
