#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "curverl/refdist.hpp"

namespace curverl {

// Prompt-weighting schemes. Each maps a pass rate p in (0,1) to the scalar
// multiplying that prompt's d p / d theta in the policy gradient.

struct Reinforce {};
struct Grpo {};
struct MaxRL {};
struct EntropicRisk {
  double eta = 1.0;
};
/// Reverse hazard rate f_ref(p) / F_ref(p) of a reference distribution.
/// A null reference means cold start: the uniform reference (MaxRL).
struct Curve {
  ReferenceHandle reference;
};
/// (1 - lambda)/p + lambda f_ref(p)/F_ref(p).
struct IntegratedConvex {
  double lambda = 0.5;
  ReferenceHandle reference;
};
/// -(ln F_ref(p) / p + f_ref(p) ln p / F_ref(p)).
struct IntegratedProduct {
  ReferenceHandle reference;
};

using WeightScheme =
    std::variant<Reinforce, Grpo, MaxRL, EntropicRisk, Curve, IntegratedConvex, IntegratedProduct>;

std::string scheme_name(const WeightScheme& scheme);

/// True for Curve and the integrated variants.
bool uses_reference(const WeightScheme& scheme);

/// The scheme's reference handle, or null for pointwise schemes.
ReferenceHandle scheme_reference(const WeightScheme& scheme);

/// Copy of `scheme` with its reference replaced (no-op for pointwise schemes).
WeightScheme with_reference(WeightScheme scheme, ReferenceHandle reference);

/// Throws std::invalid_argument on eta <= 0 or lambda outside [0, 1].
void validate(const WeightScheme& scheme);

/// Entropic-risk weight (e^eta - 1) / (eta (1 + (e^eta - 1) p)), overflow safe.
double entropic_weight(double eta, double p);

/// Throws std::domain_error unless p lies strictly inside (0, 1).
double pointwise_weight(const WeightScheme& scheme, double p);

/// Closed-form prior F_ref(p) = exp(-int_p^1 w) for Reinforce, Grpo, MaxRL.
/// Throws std::invalid_argument for other schemes, std::domain_error outside [0, 1]
/// (MaxRL requires p > 0).
double induced_prior(const WeightScheme& scheme, double p);

/// int_p^1 w(t) dt by adaptive trapezoid. Throws DivergenceError.
double tail_integral(const std::function<double(double)>& weight, double p);

/// exp(-int_p^1 w) by quadrature, for arbitrary pointwise weights.
double induced_prior_quadrature(const std::function<double(double)>& weight, double p);

/// The scheme's weight as a plain function of p (pointwise schemes only).
std::function<double(double)> pointwise_weight_function(const WeightScheme& scheme);

/// |F'(p)/F(p) - w(p)| with F' a central difference of the induced prior.
double reverse_hazard_residual(const WeightScheme& scheme, double p, double step);

/// Distortion psi applied to pass rates or to quantiles.
struct DistortionFunction {
  enum class Kind { Log, Identity, ClippedLog };
  Kind kind = Kind::Log;
  /// ClippedLog: psi(u) = ln(max(u, floor)).
  double floor = 1e-3;

  static DistortionFunction log() { return {Kind::Log, 0.0}; }
  static DistortionFunction identity() { return {Kind::Identity, 0.0}; }
  static DistortionFunction clipped_log(double floor = 1e-3) { return {Kind::ClippedLog, floor}; }

  double operator()(double u) const;
  double derivative(double u) const;
  /// Lipschitz constant on [0, 1]; empty for plain Log.
  std::optional<double> lipschitz() const;
  std::string name() const;
};

/// Weighted mean of g(p_i) under d_0.
double pointwise_utility(const DistortionFunction& g, std::span<const double> pass_rates,
                         std::span<const double> weights);

/// Weighted mean of psi(F_ref(p_i)) under d_0.
double distribution_utility(const DistortionFunction& psi, const Reference& ref,
                            std::span<const double> pass_rates, std::span<const double> weights);

struct UtilityGap {
  double gap = 0.0;
  double bound = 0.0;
  /// Grid-resolution slack 2/N allowed on top of the bound.
  double slack = 0.0;
  bool holds() const noexcept { return gap <= bound + slack; }
};

/// Utility difference between `ref` and the histogram of `rates` on the same
/// grid, against L_psi * max density * W1. Rejects non-Lipschitz psi.
UtilityGap utility_gap_bound(const DistortionFunction& psi, std::span<const double> rates,
                             std::span<const double> weights, const ReferenceDistribution& ref);

/// psi'(F_ref(p)) f_ref(p) / psi'(p).
double relative_multiplier(const DistortionFunction& psi, const Reference& ref, double p);

/// Functional derivative of Var(p) under d_0: 2p - 2 E[p]. May be negative,
/// so it is a diagnostic only and never a training scheme.
double variance_utility_weight(double p, double mean_pass_rate);

struct WeightRow {
  std::string scheme;
  double p = 0.0;
  double weight = 0.0;
  /// weight / sum of weights over the grid
  double normalized_weight = 0.0;
};

/// Weights at the rollout grid {1/N, ..., (N-1)/N}.
std::vector<WeightRow> weight_table(const WeightScheme& scheme, std::size_t n_rollouts);

void write_weight_csv(std::ostream& out, std::span<const WeightRow> rows);

}  // namespace curverl
