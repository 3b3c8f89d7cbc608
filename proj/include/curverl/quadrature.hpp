#pragma once

#include <functional>
#include <stdexcept>

namespace curverl {

/// Raised when a tail integral does not settle: the estimate is non-finite,
/// exceeds the magnitude cap, or refinement runs out of depth.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  /// Stop bisecting an interval once halving changes its estimate by less.
  double interval_tolerance = 1e-10;
  int max_depth = 48;
  double magnitude_cap = 700.0;
};

/// Adaptive trapezoid estimate of the integral of `f` over [a, b], a < b.
///
/// The integrand is first mapped through the smoothstep substitution
/// t = a + (b - a)(3u^2 - 2u^3), whose Jacobian vanishes at both ends, so
/// inverse-square-root endpoint singularities become smooth. Endpoint samples
/// that are still non-finite are replaced by quadratic extrapolation from the
/// interior. Accepted intervals get one Richardson step.
double adaptive_trapezoid(const std::function<double(double)>& f, double a, double b,
                          const QuadratureOptions& options = {});

}  // namespace curverl
