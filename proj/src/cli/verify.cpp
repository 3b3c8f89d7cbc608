#include "curverl/cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "curverl/population.hpp"
#include "curverl/refdist.hpp"
#include "curverl/trainer.hpp"
#include "curverl/weighting.hpp"

namespace curverl::cli {
namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

CheckResult below(std::string name, double measured, double tolerance) {
  return {std::move(name), measured, tolerance, measured < tolerance, "<"};
}

CheckResult above(std::string name, double measured, double threshold) {
  return {std::move(name), measured, threshold, measured > threshold, ">"};
}

std::vector<double> tenths_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  return grid;
}

SuiteReport theorem1() {
  SuiteReport r{"theorem1", {}};
  const std::vector<WeightScheme> schemes{Reinforce{}, Grpo{}, MaxRL{}};
  for (const auto& s : schemes) {
    const auto w = pointwise_weight_function(s);
    for (double p : tenths_grid()) {
      const double err = std::abs(induced_prior_quadrature(w, p) - induced_prior(s, p));
      r.checks.push_back(below("prior " + scheme_name(s) + fmt(" p=%.2f", p), err, 1e-6));
    }
  }
  for (const auto& s : schemes) {
    for (double p : tenths_grid()) {
      r.checks.push_back(
          below("hazard " + scheme_name(s) + fmt(" p=%.2f", p), reverse_hazard_residual(s, p, 1e-5), 1e-4));
    }
  }
  return r;
}

bool same_logs(const StepLog& a, const StepLog& b) {
  if (a.mean_exact_pass_rate != b.mean_exact_pass_rate || a.z_theta != b.z_theta || a.grad_norm != b.grad_norm ||
      a.active_fraction != b.active_fraction || a.window_size != b.window_size ||
      a.per_prompt.size() != b.per_prompt.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.per_prompt.size(); ++i) {
    const auto& x = a.per_prompt[i];
    const auto& y = b.per_prompt[i];
    if (x.prompt_id != y.prompt_id || x.p_hat != y.p_hat || x.weight != y.weight || x.grad_norm != y.grad_norm) {
      return false;
    }
  }
  return true;
}

SuiteReport corollary1() {
  SuiteReport r{"corollary1", {}};
  const WeightScheme uniform = Curve{uniform_reference()};
  double worst = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double p = i / 1000.0;
    worst = std::max(worst, std::abs(pointwise_weight(uniform, p) - pointwise_weight(MaxRL{}, p)));
  }
  r.checks.push_back({"analytic uniform vs maxrl, 999 points", worst, 0.0, worst == 0.0, "=="});

  worst = 0.0;
  for (std::size_t n : {2u, 4u, 8u, 16u, 64u}) {
    const WeightScheme grid = Curve{std::make_shared<const ReferenceDistribution>(ReferenceDistribution::uniform_grid(n))};
    for (std::size_t k = 1; k < n; ++k) {
      const double p = static_cast<double>(k) / static_cast<double>(n);
      worst = std::max(worst, std::abs(pointwise_weight(grid, p) - pointwise_weight(MaxRL{}, p)));
    }
  }
  r.checks.push_back({"grid uniform vs maxrl, N in {2,4,8,16,64}", worst, 0.0, worst == 0.0, "=="});

  double gap = 0.0;
  const WeightScheme skewed = Curve{truncated_exponential_reference(4.0)};
  for (int i = 1; i < 100; ++i) {
    const double p = i / 100.0;
    gap = std::max(gap, std::abs(pointwise_weight(skewed, p) - pointwise_weight(MaxRL{}, p)));
  }
  r.checks.push_back(above("non-uniform reference departs from maxrl", gap, 0.0));

  PopulationSpec ps;
  ps.size = 64;
  ps.seed = 11;
  const auto pop = generate_population(ps);
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.steps = 25;
  cfg.seed = 5;
  cfg.scheme = Curve{uniform_reference()};
  Trainer curve(pop, cfg);
  cfg.scheme = MaxRL{};
  Trainer maxrl(pop, cfg);
  std::size_t mismatched = 0;
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    if (!same_logs(curve.step(), maxrl.step())) ++mismatched;
  }
  r.checks.push_back({"25-step run, mismatched steps", static_cast<double>(mismatched), 0.0, mismatched == 0, "=="});
  return r;
}

SuiteReport prop1() {
  SuiteReport r{"prop1", {}};
  double small = 0.0, large = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const double p = 0.1 * i;
    small = std::max(small, std::abs(entropic_weight(1e-4, p) - 1.0));
    large = std::max(large, std::abs(50.0 * entropic_weight(50.0, p) - 1.0 / p));
  }
  r.checks.push_back(below("eta=1e-4 max |w - 1|", small, 1e-4));
  r.checks.push_back(below("eta=50 max |eta w - 1/p|", large, 1e-3));
  for (double eta : {0.5, 2.0, 10.0}) {
    double worst_step = -1.0;
    double prev = entropic_weight(eta, 0.001);
    for (int i = 2; i < 1000; ++i) {
      const double cur = entropic_weight(eta, i / 1000.0);
      worst_step = std::max(worst_step, cur - prev);
      prev = cur;
    }
    r.checks.push_back(below(fmt("eta=%g largest increment over 999 points", eta), worst_step, 0.0));
  }
  return r;
}

SuiteReport prop2() {
  SuiteReport r{"prop2", {}};
  constexpr std::size_t n = 8;
  for (const auto& psi : {DistortionFunction::identity(), DistortionFunction::clipped_log(1e-3)}) {
    double worst = -1e300;
    std::size_t violations = 0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
      PopulationSpec ps;
      ps.size = 40;
      ps.seed = 1000 + trial;
      ps.difficulty = {DifficultyProfile::Kind::Beta, 0.5 + trial % 5, 0.5 + (trial * 7) % 5, 0.5};
      const auto pop = generate_population(ps);
      Rng rng = make_stream(trial, {0x70326d});
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> masses(n - 1);
      for (auto& m : masses) m = u(rng) * u(rng);
      const auto ref = ReferenceDistribution::from_masses(n, masses, 10 + trial * 37);
      const auto gap = utility_gap_bound(psi, exact_pass_rates(pop), pop.base_weights, ref);
      worst = std::max(worst, gap.gap - gap.bound - gap.slack);
      if (!gap.holds()) ++violations;
    }
    r.checks.push_back({psi.name() + " max (gap - bound - 2/N) over 50 pairs", worst, 0.0, violations == 0, "<="});
  }
  return r;
}

SuiteReport prop4() {
  SuiteReport r{"prop4", {}};
  PopulationSpec ps;
  ps.size = 20;
  ps.seed = 4;
  const auto pop = generate_population(ps);
  const auto ref = fit_beta_reference(exact_pass_rates(pop), pop.base_weights);
  for (const auto& map : {square_map(), sqrt_map()}) {
    const auto c = calibration_invariance_check(pop, ref, map);
    r.checks.push_back(below("curve " + map.name + " discrepancy", c.discrepancy, 1e-8));
    const auto m = pointwise_calibration_check(pop, MaxRL{}, map);
    r.checks.push_back(above("maxrl " + map.name + " discrepancy / max|g|", m.discrepancy / m.gradient_max_norm, 0.1));
  }
  return r;
}

SuiteReport aggressiveness() {
  SuiteReport r{"aggressiveness", {}};
  const auto psi = DistortionFunction::log();
  auto largest_step = [&](const ReferenceHandle& ref, std::size_t n, double sign) {
    double worst = -1e300;
    double prev = relative_multiplier(psi, *ref, 1.0 / static_cast<double>(n));
    for (std::size_t k = 2; k < n; ++k) {
      const double cur = relative_multiplier(psi, *ref, static_cast<double>(k) / static_cast<double>(n));
      worst = std::max(worst, sign * (cur - prev));
      prev = cur;
    }
    return worst;
  };
  for (std::size_t n : {8u, 64u}) {
    r.checks.push_back(below("truncated exponential(4) R increment, N=" + std::to_string(n),
                             largest_step(truncated_exponential_reference(4.0), n, 1.0), 0.0));
    r.checks.push_back(below("reflected exponential(4) R decrement, N=" + std::to_string(n),
                             largest_step(reflected_truncated_exponential_reference(4.0), n, -1.0), 0.0));
  }

  PopulationSpec ps;
  ps.size = 100;
  ps.seed = 3;
  ps.difficulty = {DifficultyProfile::Kind::Beta, 1.0, 5.0, 0.5};
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.steps = 20;
  cfg.scheme = Curve{};
  Trainer trainer(generate_population(ps), cfg);
  std::size_t logged = 0;
  trainer.run([&](const StepLog& log) {
    bool ok = log.relative_multiplier.size() == cfg.n_rollouts - 1;
    for (double v : log.relative_multiplier) ok = ok && std::isfinite(v) && v > 0.0;
    if (ok) ++logged;
  });
  r.checks.push_back({"steps with a logged multiplier row", static_cast<double>(logged),
                      static_cast<double>(cfg.steps), logged == cfg.steps, "=="});
  return r;
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"theorem1", "corollary1", "prop1", "prop2", "prop4", "aggressiveness"};
  return names;
}

SuiteReport run_verify_suite(const std::string& suite) {
  if (suite == "theorem1") return theorem1();
  if (suite == "corollary1") return corollary1();
  if (suite == "prop1") return prop1();
  if (suite == "prop2") return prop2();
  if (suite == "prop4") return prop4();
  if (suite == "aggressiveness") return aggressiveness();
  throw std::invalid_argument("unknown suite '" + suite + "'");
}

void print_report(std::ostream& out, const SuiteReport& report) {
  char buf[64];
  for (const auto& c : report.checks) {
    out << (c.passed ? "[PASS] " : "[FAIL] ") << report.suite << ": " << c.name;
    std::snprintf(buf, sizeof buf, " = %.3e (%s %.1e)", c.measured, c.relation.c_str(), c.tolerance);
    out << buf << '\n';
  }
  out << report.suite << ": " << (report.passed() ? "ok" : "FAILED") << '\n';
}

}  // namespace curverl::cli
