#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curverl/passrate_model.hpp"

namespace curverl {

/// A reference distribution over pass rates, queried through its CDF and
/// density. Snapshots are immutable and shared by handle.
class Reference {
 public:
  virtual ~Reference() = default;
  virtual double cdf(double p) const = 0;
  virtual double density(double p) const = 0;
  virtual std::string describe() const = 0;
};

using ReferenceHandle = std::shared_ptr<const Reference>;

/// Continuous reference given by closed-form CDF and density.
class AnalyticReference final : public Reference {
 public:
  AnalyticReference(std::string name, std::function<double(double)> cdf,
                    std::function<double(double)> density);

  double cdf(double p) const override { return cdf_(p); }
  double density(double p) const override { return density_(p); }
  std::string describe() const override { return name_; }

 private:
  std::string name_;
  std::function<double(double)> cdf_;
  std::function<double(double)> density_;
};

/// F(p) = p, f(p) = 1.
ReferenceHandle uniform_reference();
/// F(p) = (1 - e^{-lambda p}) / (1 - e^{-lambda}); mass piled near 0.
ReferenceHandle truncated_exponential_reference(double lambda);
/// F(p) = (e^{lambda p} - 1) / (e^{lambda} - 1); mirror image of the above.
ReferenceHandle reflected_truncated_exponential_reference(double lambda);
ReferenceHandle beta_reference(double alpha, double beta);
/// Method-of-moments Beta fit to weighted pass rates. Rates must have
/// positive variance and lie strictly inside (0, 1).
ReferenceHandle fit_beta_reference(std::span<const double> rates, std::span<const double> weights);

/// Strictly increasing differentiable map G: [0,1] -> [0,1].
struct MonotoneMap {
  std::string name;
  std::function<double(double)> forward;
  std::function<double(double)> derivative;
  /// Optional closed-form inverse; bisection is used when empty.
  std::function<double(double)> inverse;

  double invert(double u) const;
};

MonotoneMap identity_map();
MonotoneMap square_map();
MonotoneMap sqrt_map();

/// Throws std::invalid_argument unless `map` is strictly increasing on a
/// 1001-point grid over [0, 1].
void validate(const MonotoneMap& map);

/// Reference of G(P) when P ~ base: F(G^{-1}(u)), f(G^{-1}(u)) / G'(G^{-1}(u)).
ReferenceHandle pushforward_reference(ReferenceHandle base, MonotoneMap map);

/// Histogram reference on the rollout grid {1/N, ..., (N-1)/N}.
///
/// Masses sit on the grid points themselves; density is mass * N (bin width
/// 1/N). Floors keep CDF and density strictly positive so f/F stays finite:
/// cdf_floor = 1/(sample_count+1), density_floor = 0.5 * N/(sample_count+1).
/// Raw (pre-floor) CDF values are kept for transport distances.
class ReferenceDistribution final : public Reference {
 public:
  /// Histogram from per-bin masses (length N-1, normalized internally).
  static ReferenceDistribution from_masses(std::size_t n_rollouts, std::vector<double> masses,
                                           std::size_t sample_count);
  /// F(p) = p and f(p) = 1 restricted to the grid; no floors.
  static ReferenceDistribution uniform_grid(std::size_t n_rollouts);
  /// Rebuild a dumped snapshot from its stored columns verbatim.
  static ReferenceDistribution from_columns(std::size_t n_rollouts, std::vector<double> mass,
                                            std::vector<double> cdf, std::vector<double> density,
                                            std::size_t sample_count);

  std::size_t n_rollouts() const noexcept { return n_; }
  std::size_t sample_count() const noexcept { return sample_count_; }
  std::span<const double> bin_mass() const noexcept { return mass_; }
  std::span<const double> raw_cdf() const noexcept { return raw_cdf_; }
  std::span<const double> floored_cdf() const noexcept { return cdf_; }
  std::span<const double> floored_density() const noexcept { return density_; }
  double cdf_floor() const noexcept { return cdf_floor_; }
  double density_floor() const noexcept { return density_floor_; }
  /// Largest per-unit-length density before flooring.
  double max_density() const noexcept;

  /// Grid point k/N for index k-1.
  double grid_point(std::size_t index) const noexcept;
  /// Index of the nearest grid point, clamped to the grid. Off-grid queries
  /// increment the global off-grid counter.
  std::size_t grid_index(double p) const;

  double cdf_at(double p) const { return cdf_[grid_index(p)]; }
  double density_at(double p) const { return density_[grid_index(p)]; }

  double cdf(double p) const override { return cdf_at(p); }
  double density(double p) const override { return density_at(p); }
  std::string describe() const override;

 private:
  ReferenceDistribution() = default;

  std::size_t n_ = 0;
  std::size_t sample_count_ = 0;
  std::vector<double> mass_;
  std::vector<double> raw_cdf_;
  std::vector<double> cdf_;
  std::vector<double> density_;
  double cdf_floor_ = 0.0;
  double density_floor_ = 0.0;
};

/// Number of off-grid cdf_at / density_at queries snapped so far (process-wide).
std::size_t off_grid_query_count();
void reset_off_grid_query_count();

/// FIFO store of recent active pass rates, evicted by step tag.
class SlidingWindow {
 public:
  struct Entry {
    std::int64_t step;
    double pass_rate;
  };

  SlidingWindow(std::size_t t0, std::size_t batch_size);

  /// Evicts entries with tag <= step - t0, then appends rates in (0,1) tagged
  /// with `step`. Rates equal to 0 or 1 are dropped.
  void push_batch(std::int64_t step, std::span<const double> pass_rates);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t capacity() const noexcept { return t0_ * batch_size_; }
  std::size_t t0() const noexcept { return t0_; }
  const std::deque<Entry>& entries() const noexcept { return entries_; }

 private:
  std::size_t t0_;
  std::size_t batch_size_;
  std::deque<Entry> entries_;
};

/// Histogram estimate of the window on the N-rollout grid; std::nullopt for an
/// empty window (cold start).
std::optional<ReferenceDistribution> estimate(const SlidingWindow& window, std::size_t n_rollouts);

/// Weighted histogram of arbitrary rates by nearest-grid snapping.
ReferenceDistribution histogram_from_rates(std::span<const double> rates, std::span<const double> weights,
                                           std::size_t n_rollouts);

/// Histogram of the analytic pass rates under d_0.
ReferenceDistribution exact_policy_distribution(const PromptPopulation& population, std::size_t n_rollouts);

/// Law of p-hat given p-hat in (0,1) when each prompt is drawn from d_0 and
/// rolled out N times: the limit of estimate() on rollout-fed windows.
ReferenceDistribution expected_active_distribution(const PromptPopulation& population,
                                                   std::size_t n_rollouts);

/// sum_k |F_a(k/N) - F_b(k/N)| / N on raw CDFs. Throws on grid mismatch.
double wasserstein1(const ReferenceDistribution& a, const ReferenceDistribution& b);

/// Total-variation distance between the bin masses.
double total_variation(const ReferenceDistribution& a, const ReferenceDistribution& b);

}  // namespace curverl
