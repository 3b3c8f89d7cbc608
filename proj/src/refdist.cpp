#include "curverl/refdist.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/tools/roots.hpp>

namespace curverl {
namespace {

std::atomic<std::size_t> g_off_grid_queries{0};

}  // namespace

// ---------------------------------------------------------------------------
// Analytic references

AnalyticReference::AnalyticReference(std::string name, std::function<double(double)> cdf,
                                     std::function<double(double)> density)
    : name_(std::move(name)), cdf_(std::move(cdf)), density_(std::move(density)) {}

ReferenceHandle uniform_reference() {
  return std::make_shared<AnalyticReference>(
      "uniform", [](double p) { return p; }, [](double) { return 1.0; });
}

ReferenceHandle truncated_exponential_reference(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("truncated exponential needs lambda > 0");
  const double norm = -std::expm1(-lambda);
  return std::make_shared<AnalyticReference>(
      "truncexp(" + std::to_string(lambda) + ")",
      [lambda, norm](double p) { return -std::expm1(-lambda * p) / norm; },
      [lambda, norm](double p) { return lambda * std::exp(-lambda * p) / norm; });
}

ReferenceHandle reflected_truncated_exponential_reference(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("reflected truncated exponential needs lambda > 0");
  const double norm = std::expm1(lambda);
  return std::make_shared<AnalyticReference>(
      "reflected_truncexp(" + std::to_string(lambda) + ")",
      [lambda, norm](double p) { return std::expm1(lambda * p) / norm; },
      [lambda, norm](double p) { return lambda * std::exp(lambda * p) / norm; });
}

ReferenceHandle beta_reference(double alpha, double beta) {
  const boost::math::beta_distribution<double> dist(alpha, beta);
  std::ostringstream name;
  name << "beta(" << alpha << "," << beta << ")";
  return std::make_shared<AnalyticReference>(
      name.str(), [dist](double p) { return boost::math::cdf(dist, std::clamp(p, 0.0, 1.0)); },
      [dist](double p) { return boost::math::pdf(dist, std::clamp(p, 0.0, 1.0)); });
}

ReferenceHandle fit_beta_reference(std::span<const double> rates, std::span<const double> weights) {
  if (rates.size() != weights.size() || rates.empty()) {
    throw std::invalid_argument("fit_beta_reference: rates and weights must be nonempty and aligned");
  }
  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] > 0.0 && rates[i] < 1.0)) {
      throw std::domain_error("fit_beta_reference: rates must lie in (0, 1)");
    }
    wsum += weights[i];
    mean += weights[i] * rates[i];
  }
  mean /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) var += weights[i] * (rates[i] - mean) * (rates[i] - mean);
  var /= wsum;
  const double common = mean * (1.0 - mean) / var - 1.0;
  if (!(var > 0.0) || !(common > 0.0)) {
    throw std::domain_error("fit_beta_reference: degenerate rate distribution");
  }
  return beta_reference(mean * common, (1.0 - mean) * common);
}

// ---------------------------------------------------------------------------
// Monotone maps

double MonotoneMap::invert(double u) const {
  if (inverse) return inverse(u);
  auto f = [this, u](double x) { return forward(x) - u; };
  boost::math::tools::eps_tolerance<double> tol(52);
  auto [lo, hi] = boost::math::tools::bisect(f, 0.0, 1.0, tol);
  return 0.5 * (lo + hi);
}

MonotoneMap identity_map() {
  return {"identity", [](double t) { return t; }, [](double) { return 1.0; }, [](double u) { return u; }};
}

MonotoneMap square_map() {
  return {"square", [](double t) { return t * t; }, [](double t) { return 2.0 * t; },
          [](double u) { return std::sqrt(u); }};
}

MonotoneMap sqrt_map() {
  return {"sqrt", [](double t) { return std::sqrt(t); }, [](double t) { return 0.5 / std::sqrt(t); },
          [](double u) { return u * u; }};
}

void validate(const MonotoneMap& map) {
  if (!map.forward || !map.derivative) throw std::invalid_argument("monotone map needs forward and derivative");
  constexpr int kPoints = 1001;
  double prev = map.forward(0.0);
  for (int i = 1; i < kPoints; ++i) {
    const double cur = map.forward(static_cast<double>(i) / (kPoints - 1));
    if (!(cur > prev)) {
      throw std::invalid_argument("map '" + map.name + "' is not strictly increasing on [0, 1]");
    }
    prev = cur;
  }
}

ReferenceHandle pushforward_reference(ReferenceHandle base, MonotoneMap map) {
  validate(map);
  auto name = base->describe() + " o " + map.name + "^-1";
  auto shared_map = std::make_shared<const MonotoneMap>(std::move(map));
  return std::make_shared<AnalyticReference>(
      std::move(name),
      [base, shared_map](double u) { return base->cdf(shared_map->invert(u)); },
      [base, shared_map](double u) {
        const double x = shared_map->invert(u);
        return base->density(x) / shared_map->derivative(x);
      });
}

// ---------------------------------------------------------------------------
// Histogram references

ReferenceDistribution ReferenceDistribution::from_masses(std::size_t n_rollouts, std::vector<double> masses,
                                                         std::size_t sample_count) {
  if (n_rollouts < 2) throw std::invalid_argument("reference grid needs N >= 2");
  if (masses.size() != n_rollouts - 1) throw std::invalid_argument("expected N-1 bin masses");
  double total = 0.0;
  for (double m : masses) {
    if (!(m >= 0.0)) throw std::invalid_argument("bin masses must be nonnegative");
    total += m;
  }
  if (!(total > 0.0)) throw std::invalid_argument("bin masses must not all be zero");

  ReferenceDistribution ref;
  ref.n_ = n_rollouts;
  ref.sample_count_ = sample_count;
  const auto nd = static_cast<double>(n_rollouts);
  ref.mass_ = std::move(masses);
  for (auto& m : ref.mass_) m /= total;
  ref.raw_cdf_.resize(ref.mass_.size());
  std::partial_sum(ref.mass_.begin(), ref.mass_.end(), ref.raw_cdf_.begin());
  ref.raw_cdf_.back() = 1.0;

  ref.cdf_floor_ = 1.0 / (static_cast<double>(sample_count) + 1.0);
  ref.density_floor_ = 0.5 * nd / (static_cast<double>(sample_count) + 1.0);
  ref.cdf_.resize(ref.mass_.size());
  ref.density_.resize(ref.mass_.size());
  for (std::size_t i = 0; i < ref.mass_.size(); ++i) {
    ref.cdf_[i] = std::min(1.0, std::max(ref.raw_cdf_[i], ref.cdf_floor_));
    ref.density_[i] = std::max(ref.mass_[i] * nd, ref.density_floor_);
  }
  return ref;
}

ReferenceDistribution ReferenceDistribution::uniform_grid(std::size_t n_rollouts) {
  if (n_rollouts < 2) throw std::invalid_argument("reference grid needs N >= 2");
  ReferenceDistribution ref;
  ref.n_ = n_rollouts;
  const auto nd = static_cast<double>(n_rollouts);
  for (std::size_t k = 1; k < n_rollouts; ++k) {
    ref.mass_.push_back(1.0 / nd);
    // Same expression as an empirical pass rate k/N so f/F == 1/p-hat bitwise.
    ref.raw_cdf_.push_back(static_cast<double>(k) / nd);
    ref.density_.push_back(1.0);
  }
  ref.cdf_ = ref.raw_cdf_;
  return ref;
}

ReferenceDistribution ReferenceDistribution::from_columns(std::size_t n_rollouts, std::vector<double> mass,
                                                          std::vector<double> cdf, std::vector<double> density,
                                                          std::size_t sample_count) {
  if (n_rollouts < 2) throw std::invalid_argument("reference grid needs N >= 2");
  if (mass.size() != n_rollouts - 1 || cdf.size() != mass.size() || density.size() != mass.size()) {
    throw std::invalid_argument("reference columns must each have N-1 entries");
  }
  ReferenceDistribution ref;
  ref.n_ = n_rollouts;
  ref.sample_count_ = sample_count;
  ref.mass_ = std::move(mass);
  ref.raw_cdf_.resize(ref.mass_.size());
  std::partial_sum(ref.mass_.begin(), ref.mass_.end(), ref.raw_cdf_.begin());
  ref.cdf_ = std::move(cdf);
  ref.density_ = std::move(density);
  for (std::size_t i = 0; i < ref.cdf_.size(); ++i) {
    if (!(ref.cdf_[i] > 0.0) || !(ref.density_[i] > 0.0)) {
      throw std::invalid_argument("reference snapshot has a non-positive cdf or density entry");
    }
  }
  return ref;
}

double ReferenceDistribution::max_density() const noexcept {
  double hi = 0.0;
  for (double m : mass_) hi = std::max(hi, m * static_cast<double>(n_));
  return hi;
}

double ReferenceDistribution::grid_point(std::size_t index) const noexcept {
  return static_cast<double>(index + 1) / static_cast<double>(n_);
}

std::size_t ReferenceDistribution::grid_index(double p) const {
  if (std::isnan(p)) throw std::domain_error("reference query at NaN");
  const double x = p * static_cast<double>(n_);
  const auto hi = static_cast<long long>(n_) - 1;
  long long k = std::llround(std::clamp(x, -1.0, static_cast<double>(n_) + 1.0));
  if (std::abs(x - static_cast<double>(k)) > 1e-9 || k < 1 || k > hi) {
    g_off_grid_queries.fetch_add(1, std::memory_order_relaxed);
  }
  k = std::clamp(k, 1LL, hi);
  return static_cast<std::size_t>(k - 1);
}

std::string ReferenceDistribution::describe() const {
  return "histogram(N=" + std::to_string(n_) + ", samples=" + std::to_string(sample_count_) + ")";
}

std::size_t off_grid_query_count() { return g_off_grid_queries.load(); }
void reset_off_grid_query_count() { g_off_grid_queries.store(0); }

// ---------------------------------------------------------------------------
// Sliding window

SlidingWindow::SlidingWindow(std::size_t t0, std::size_t batch_size) : t0_(t0), batch_size_(batch_size) {
  if (t0 == 0) throw std::invalid_argument("sliding window needs t0 >= 1");
  if (batch_size == 0) throw std::invalid_argument("sliding window needs batch_size >= 1");
}

void SlidingWindow::push_batch(std::int64_t step, std::span<const double> pass_rates) {
  const std::int64_t cutoff = step - static_cast<std::int64_t>(t0_);
  while (!entries_.empty() && entries_.front().step <= cutoff) entries_.pop_front();
  std::size_t appended = 0;
  for (double p : pass_rates) {
    if (p > 0.0 && p < 1.0) {
      entries_.push_back({step, p});
      ++appended;
    }
  }
  if (appended > batch_size_) {
    throw std::invalid_argument("push_batch: more active rates than the batch size");
  }
}

std::optional<ReferenceDistribution> estimate(const SlidingWindow& window, std::size_t n_rollouts) {
  if (window.empty()) return std::nullopt;
  std::vector<double> rates;
  rates.reserve(window.size());
  for (const auto& e : window.entries()) rates.push_back(e.pass_rate);
  const std::vector<double> ones(rates.size(), 1.0);
  return histogram_from_rates(rates, ones, n_rollouts);
}

ReferenceDistribution histogram_from_rates(std::span<const double> rates, std::span<const double> weights,
                                           std::size_t n_rollouts) {
  if (rates.size() != weights.size()) throw std::invalid_argument("rates and weights must be aligned");
  if (n_rollouts < 2) throw std::invalid_argument("reference grid needs N >= 2");
  std::vector<double> mass(n_rollouts - 1, 0.0);
  const auto nd = static_cast<double>(n_rollouts);
  const auto hi = static_cast<long long>(n_rollouts) - 1;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const long long k = std::clamp(std::llround(rates[i] * nd), 1LL, hi);
    mass[static_cast<std::size_t>(k - 1)] += weights[i];
  }
  return ReferenceDistribution::from_masses(n_rollouts, std::move(mass), rates.size());
}

ReferenceDistribution exact_policy_distribution(const PromptPopulation& population, std::size_t n_rollouts) {
  const auto rates = exact_pass_rates(population);
  return histogram_from_rates(rates, population.base_weights, n_rollouts);
}

ReferenceDistribution expected_active_distribution(const PromptPopulation& population,
                                                   std::size_t n_rollouts) {
  std::vector<double> mass(n_rollouts - 1, 0.0);
  for (std::size_t i = 0; i < population.size(); ++i) {
    const double p = exact_pass_rate(population.prompts[i]);
    if (p <= 0.0 || p >= 1.0) continue;
    const boost::math::binomial_distribution<double> binom(static_cast<double>(n_rollouts), p);
    for (std::size_t k = 1; k < n_rollouts; ++k) {
      mass[k - 1] += population.base_weights[i] * boost::math::pdf(binom, static_cast<double>(k));
    }
  }
  return ReferenceDistribution::from_masses(n_rollouts, std::move(mass), population.size());
}

double wasserstein1(const ReferenceDistribution& a, const ReferenceDistribution& b) {
  if (a.n_rollouts() != b.n_rollouts()) throw std::invalid_argument("wasserstein1: grid mismatch");
  const auto ca = a.raw_cdf();
  const auto cb = b.raw_cdf();
  double acc = 0.0;
  for (std::size_t k = 0; k < ca.size(); ++k) acc += std::abs(ca[k] - cb[k]);
  return acc / static_cast<double>(a.n_rollouts());
}

double total_variation(const ReferenceDistribution& a, const ReferenceDistribution& b) {
  if (a.n_rollouts() != b.n_rollouts()) throw std::invalid_argument("total_variation: grid mismatch");
  const auto ma = a.bin_mass();
  const auto mb = b.bin_mass();
  double acc = 0.0;
  for (std::size_t k = 0; k < ma.size(); ++k) acc += std::abs(ma[k] - mb[k]);
  return 0.5 * acc;
}

}  // namespace curverl
