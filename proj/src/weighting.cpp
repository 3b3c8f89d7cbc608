#include "curverl/weighting.hpp"

#include <cmath>
#include <numbers>

#include "curverl/csv.hpp"
#include "curverl/quadrature.hpp"

namespace curverl {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error(std::string(what) + ": pass rate " + std::to_string(p) + " outside (0, 1)");
  }
}

const Reference& resolve(const ReferenceHandle& ref) {
  static const ReferenceHandle fallback = uniform_reference();
  return ref ? *ref : *fallback;
}

// f/F with a guard against an empty CDF.
double reverse_hazard(const Reference& ref, double p) {
  const double big_f = ref.cdf(p);
  if (!(big_f > 0.0)) throw std::domain_error("reference CDF is zero at p=" + std::to_string(p));
  return ref.density(p) / big_f;
}

}  // namespace

std::string scheme_name(const WeightScheme& scheme) {
  return std::visit(overloaded{
                        [](const Reinforce&) { return std::string("reinforce"); },
                        [](const Grpo&) { return std::string("grpo"); },
                        [](const MaxRL&) { return std::string("maxrl"); },
                        [](const EntropicRisk&) { return std::string("entropic"); },
                        [](const Curve&) { return std::string("curve"); },
                        [](const IntegratedConvex&) { return std::string("integrated_convex"); },
                        [](const IntegratedProduct&) { return std::string("integrated_product"); },
                    },
                    scheme);
}

bool uses_reference(const WeightScheme& scheme) {
  return std::holds_alternative<Curve>(scheme) || std::holds_alternative<IntegratedConvex>(scheme) ||
         std::holds_alternative<IntegratedProduct>(scheme);
}

ReferenceHandle scheme_reference(const WeightScheme& scheme) {
  if (auto* c = std::get_if<Curve>(&scheme)) return c->reference;
  if (auto* c = std::get_if<IntegratedConvex>(&scheme)) return c->reference;
  if (auto* c = std::get_if<IntegratedProduct>(&scheme)) return c->reference;
  return nullptr;
}

WeightScheme with_reference(WeightScheme scheme, ReferenceHandle reference) {
  if (auto* c = std::get_if<Curve>(&scheme)) c->reference = std::move(reference);
  else if (auto* c = std::get_if<IntegratedConvex>(&scheme)) c->reference = std::move(reference);
  else if (auto* c = std::get_if<IntegratedProduct>(&scheme)) c->reference = std::move(reference);
  return scheme;
}

void validate(const WeightScheme& scheme) {
  if (auto* e = std::get_if<EntropicRisk>(&scheme); e && !(e->eta > 0.0 && std::isfinite(e->eta))) {
    throw std::invalid_argument("entropic risk needs eta > 0");
  }
  if (auto* c = std::get_if<IntegratedConvex>(&scheme); c && !(c->lambda >= 0.0 && c->lambda <= 1.0)) {
    throw std::invalid_argument("integrated_convex needs lambda in [0, 1]");
  }
}

double entropic_weight(double eta, double p) {
  if (!(eta > 0.0)) throw std::domain_error("entropic weight needs eta > 0");
  // Beyond eta*p = 30 the 1/(e^eta - 1) term is below e^-30 relative to p.
  if (eta * p > 30.0) return 1.0 / (eta * p);
  // (e^eta - 1) / (eta (1 + (e^eta - 1) p)) == 1 / (eta (p + 1/expm1(eta)))
  return 1.0 / (eta * (p + 1.0 / std::expm1(eta)));
}

double pointwise_weight(const WeightScheme& scheme, double p) {
  require_open_unit(p, "pointwise_weight");
  return std::visit(overloaded{
                        [](const Reinforce&) { return 1.0; },
                        [p](const Grpo&) { return 1.0 / std::sqrt(p * (1.0 - p)); },
                        [p](const MaxRL&) { return 1.0 / p; },
                        [p](const EntropicRisk& e) { return entropic_weight(e.eta, p); },
                        [p](const Curve& c) { return reverse_hazard(resolve(c.reference), p); },
                        [p](const IntegratedConvex& c) {
                          return (1.0 - c.lambda) / p + c.lambda * reverse_hazard(resolve(c.reference), p);
                        },
                        [p](const IntegratedProduct& c) {
                          const auto& ref = resolve(c.reference);
                          const double big_f = ref.cdf(p);
                          if (!(big_f > 0.0)) throw std::domain_error("reference CDF is zero");
                          return -(std::log(big_f) / p + ref.density(p) * std::log(p) / big_f);
                        },
                    },
                    scheme);
}

double induced_prior(const WeightScheme& scheme, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("induced_prior: p outside [0, 1]");
  if (std::holds_alternative<Reinforce>(scheme)) return std::exp(p - 1.0);
  if (std::holds_alternative<Grpo>(scheme)) return std::exp(2.0 * std::asin(std::sqrt(p)) - std::numbers::pi);
  if (std::holds_alternative<MaxRL>(scheme)) {
    if (p == 0.0) throw std::domain_error("induced_prior: MaxRL tail integral diverges at 0");
    return p;  // exp(-(-ln p))
  }
  throw std::invalid_argument("induced_prior: only reinforce, grpo and maxrl have closed forms");
}

double tail_integral(const std::function<double(double)>& weight, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("tail_integral: p outside [0, 1]");
  if (p == 1.0) return 0.0;
  return adaptive_trapezoid(weight, p, 1.0);
}

double induced_prior_quadrature(const std::function<double(double)>& weight, double p) {
  return std::exp(-tail_integral(weight, p));
}

std::function<double(double)> pointwise_weight_function(const WeightScheme& scheme) {
  if (uses_reference(scheme)) throw std::invalid_argument("scheme depends on a reference distribution");
  validate(scheme);
  // Evaluated on closed intervals by quadrature, so the open-interval guard of
  // pointwise_weight does not apply here.
  return std::visit(overloaded{
                        [](const Reinforce&) -> std::function<double(double)> { return [](double) { return 1.0; }; },
                        [](const Grpo&) -> std::function<double(double)> {
                          return [](double t) { return 1.0 / std::sqrt(t * (1.0 - t)); };
                        },
                        [](const MaxRL&) -> std::function<double(double)> { return [](double t) { return 1.0 / t; }; },
                        [](const EntropicRisk& e) -> std::function<double(double)> {
                          return [eta = e.eta](double t) { return entropic_weight(eta, t); };
                        },
                        [](const auto&) -> std::function<double(double)> { return nullptr; },
                    },
                    scheme);
}

double reverse_hazard_residual(const WeightScheme& scheme, double p, double step) {
  if (!(p > step && p < 1.0 - step)) throw std::domain_error("reverse_hazard_residual: p too close to an end");
  const double big_f = induced_prior(scheme, p);
  const double slope = (induced_prior(scheme, p + step) - induced_prior(scheme, p - step)) / (2.0 * step);
  return std::abs(slope / big_f - pointwise_weight(scheme, p));
}

// ---------------------------------------------------------------------------
// Distortions and utilities

double DistortionFunction::operator()(double u) const {
  switch (kind) {
    case Kind::Identity:
      return u;
    case Kind::Log:
      if (!(u > 0.0)) throw std::domain_error("log distortion at a non-positive argument");
      return std::log(u);
    case Kind::ClippedLog:
      return std::log(std::max(u, floor));
  }
  return u;
}

double DistortionFunction::derivative(double u) const {
  switch (kind) {
    case Kind::Identity:
      return 1.0;
    case Kind::Log:
      if (!(u > 0.0)) throw std::domain_error("log distortion derivative at a non-positive argument");
      return 1.0 / u;
    case Kind::ClippedLog:
      return u > floor ? 1.0 / u : 0.0;
  }
  return 1.0;
}

std::optional<double> DistortionFunction::lipschitz() const {
  switch (kind) {
    case Kind::Identity:
      return 1.0;
    case Kind::ClippedLog:
      return 1.0 / floor;
    case Kind::Log:
      return std::nullopt;
  }
  return std::nullopt;
}

std::string DistortionFunction::name() const {
  switch (kind) {
    case Kind::Identity:
      return "identity";
    case Kind::Log:
      return "log";
    case Kind::ClippedLog:
      return "clipped_log(" + format_double(floor) + ")";
  }
  return "?";
}

double pointwise_utility(const DistortionFunction& g, std::span<const double> pass_rates,
                         std::span<const double> weights) {
  if (pass_rates.size() != weights.size()) throw std::invalid_argument("rates and weights must be aligned");
  double acc = 0.0, total = 0.0;
  for (std::size_t i = 0; i < pass_rates.size(); ++i) {
    acc += weights[i] * g(pass_rates[i]);
    total += weights[i];
  }
  return acc / total;
}

double distribution_utility(const DistortionFunction& psi, const Reference& ref,
                            std::span<const double> pass_rates, std::span<const double> weights) {
  if (pass_rates.size() != weights.size()) throw std::invalid_argument("rates and weights must be aligned");
  double acc = 0.0, total = 0.0;
  for (std::size_t i = 0; i < pass_rates.size(); ++i) {
    acc += weights[i] * psi(ref.cdf(pass_rates[i]));
    total += weights[i];
  }
  return acc / total;
}

UtilityGap utility_gap_bound(const DistortionFunction& psi, std::span<const double> rates,
                             std::span<const double> weights, const ReferenceDistribution& ref) {
  const auto lip = psi.lipschitz();
  if (!lip) throw std::invalid_argument("utility gap bound needs a Lipschitz distortion, got " + psi.name());
  if (rates.empty()) throw std::invalid_argument("utility gap bound needs at least one rate");
  const auto own = histogram_from_rates(rates, weights, ref.n_rollouts());

  // U(F) = sum_k mass_k psi(F(k/N)) under the histogram law of the rates.
  const auto mass = own.bin_mass();
  double u_ref = 0.0, u_own = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    u_ref += mass[k] * psi(ref.floored_cdf()[k]);
    u_own += mass[k] * psi(own.floored_cdf()[k]);
  }
  UtilityGap out;
  out.gap = std::abs(u_ref - u_own);
  out.bound = *lip * own.max_density() * wasserstein1(ref, own);
  out.slack = 2.0 / static_cast<double>(ref.n_rollouts());
  return out;
}

double relative_multiplier(const DistortionFunction& psi, const Reference& ref, double p) {
  const double den = psi.derivative(p);
  if (den == 0.0) throw std::domain_error("relative multiplier: psi'(p) is zero");
  return psi.derivative(ref.cdf(p)) * ref.density(p) / den;
}

double variance_utility_weight(double p, double mean_pass_rate) { return 2.0 * p - 2.0 * mean_pass_rate; }

std::vector<WeightRow> weight_table(const WeightScheme& scheme, std::size_t n_rollouts) {
  if (n_rollouts < 2) throw std::invalid_argument("weight table needs N >= 2");
  validate(scheme);
  std::vector<WeightRow> rows;
  double total = 0.0;
  const auto name = scheme_name(scheme);
  for (std::size_t k = 1; k < n_rollouts; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(n_rollouts);
    const double w = pointwise_weight(scheme, p);
    rows.push_back({name, p, w, 0.0});
    total += w;
  }
  for (auto& r : rows) r.normalized_weight = r.weight / total;
  return rows;
}

void write_weight_csv(std::ostream& out, std::span<const WeightRow> rows) {
  CsvWriter csv(out, {"scheme", "p", "weight", "normalized_weight"});
  for (const auto& r : rows) {
    csv.field(r.scheme).field(r.p).field(r.weight).field(r.normalized_weight);
    csv.end_row();
  }
}

}  // namespace curverl
