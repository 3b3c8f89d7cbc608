#include "curverl/quadrature.hpp"

#include <cmath>
#include <string>

namespace curverl {
namespace {

struct Integrand {
  const std::function<double(double)>& f;
  double a;
  double width;

  double raw(double u) const {
    const double s = u * u * (3.0 - 2.0 * u);
    const double jac = 6.0 * u * (1.0 - u) * width;
    if (jac == 0.0) return std::nan("");
    return f(a + width * s) * jac;
  }

  // Endpoint values come from the one-sided limit.
  double at(double u) const {
    const double v = raw(u);
    if (std::isfinite(v)) return v;
    constexpr double h = 1e-3;
    const double dir = u < 0.5 ? 1.0 : -1.0;
    const double y1 = raw(u + dir * h);
    const double y2 = raw(u + dir * 2.0 * h);
    const double y3 = raw(u + dir * 3.0 * h);
    return 3.0 * y1 - 3.0 * y2 + y3;
  }
};

struct Refiner {
  const Integrand& g;
  const QuadratureOptions& opt;

  double run(double lo, double hi, double flo, double fhi, double whole, int depth) const {
    const double mid = 0.5 * (lo + hi);
    const double fmid = g.at(mid);
    const double left = 0.5 * (mid - lo) * (flo + fmid);
    const double right = 0.5 * (hi - mid) * (fmid + fhi);
    const double both = left + right;
    if (!std::isfinite(both)) throw DivergenceError("integrand is not finite");
    if (std::abs(both - whole) < opt.interval_tolerance) return both + (both - whole) / 3.0;
    if (depth >= opt.max_depth) throw DivergenceError("tail integral did not converge");
    return run(lo, mid, flo, fmid, left, depth + 1) + run(mid, hi, fmid, fhi, right, depth + 1);
  }
};

}  // namespace

double adaptive_trapezoid(const std::function<double(double)>& f, double a, double b,
                          const QuadratureOptions& options) {
  if (!(b > a)) return 0.0;
  const Integrand g{f, a, b - a};
  const Refiner refine{g, options};

  // Coarse pre-split so symmetric integrands cannot fool the first comparison.
  constexpr int kPanels = 16;
  double total = 0.0;
  double ulo = 0.0;
  double flo = g.at(0.0);
  for (int i = 1; i <= kPanels; ++i) {
    const double uhi = static_cast<double>(i) / kPanels;
    const double fhi = g.at(uhi);
    const double whole = 0.5 * (uhi - ulo) * (flo + fhi);
    total += refine.run(ulo, uhi, flo, fhi, whole, 0);
    if (std::abs(total) > options.magnitude_cap) {
      throw DivergenceError("tail integral exceeds magnitude cap " + std::to_string(options.magnitude_cap));
    }
    ulo = uhi;
    flo = fhi;
  }
  return total;
}

}  // namespace curverl
