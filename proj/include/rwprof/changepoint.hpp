#pragma once

// Bayesian online changepoint detection with a constant hazard and a
// Normal-Gamma conjugate prior (Student-t predictive), run in log space.

#include <rwprof/error.hpp>
#include <rwprof/trace.hpp>
#include <rwprof/windowing.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

namespace rwprof {

struct NormalGammaPrior {
  double mu0 = 0.0;
  double kappa0 = 1.0;
  double alpha0 = 1.0;
  double beta0 = 1.0;
};

struct BocdParams {
  double hazard_lambda = 200.0;  // expected run length between changes
  NormalGammaPrior prior;
  // A reset is a MAP run length that falls below reset_ratio * previous and
  // below reset_max_run.
  double reset_ratio = 0.5;
  std::size_t reset_max_run = 5;
  double min_gap = 3.0;  // steps between counted changepoints

  void validate() const {
    if (!(hazard_lambda > 0.0)) throw ValidationError("hazard_lambda must be positive");
    if (!(prior.kappa0 > 0.0) || !(prior.alpha0 > 0.0) || !(prior.beta0 > 0.0))
      throw ValidationError("kappa0, alpha0 and beta0 must be positive");
  }
};

namespace detail {

inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

/// Sequential run-length posterior. Run length r at step t means the last r
/// observations (x[t-r+1..t]) belong to the current regime.
class BocdFilter {
 public:
  explicit BocdFilter(const BocdParams& params) : params_(params) {
    params_.validate();
    log_h_ = -std::log(params_.hazard_lambda);
    log_1mh_ = std::log1p(-1.0 / params_.hazard_lambda);
    reset();
  }

  void reset() {
    log_post_.assign(1, 0.0);
    mu_.assign(1, params_.prior.mu0);
    kappa_.assign(1, params_.prior.kappa0);
    beta_.assign(1, params_.prior.beta0);
    steps_ = 0;
  }

  void update(double x) {
    const std::size_t n = log_post_.size();
    ensure_gamma_terms(n);

    std::vector<double> joint(n);
    for (std::size_t r = 0; r < n; ++r) joint[r] = log_post_[r] + log_predictive(r, x);

    std::vector<double> next(n + 1);
    next[0] = detail::log_sum_exp(joint) + log_h_;
    for (std::size_t r = 0; r < n; ++r) next[r + 1] = joint[r] + log_1mh_;
    const double norm = detail::log_sum_exp(next);
    for (auto& v : next) v -= norm;
    log_post_ = std::move(next);

    std::vector<double> mu(n + 1), kappa(n + 1), beta(n + 1);
    mu[0] = params_.prior.mu0;
    kappa[0] = params_.prior.kappa0;
    beta[0] = params_.prior.beta0;
    for (std::size_t r = 0; r < n; ++r) {
      const double k = kappa_[r];
      const double d = x - mu_[r];
      mu[r + 1] = (k * mu_[r] + x) / (k + 1.0);
      kappa[r + 1] = k + 1.0;
      beta[r + 1] = beta_[r] + k * d * d / (2.0 * (k + 1.0));
    }
    mu_ = std::move(mu);
    kappa_ = std::move(kappa);
    beta_ = std::move(beta);
    ++steps_;
  }

  std::size_t steps() const noexcept { return steps_; }

  std::size_t map_run_length() const {
    return static_cast<std::size_t>(std::max_element(log_post_.begin(), log_post_.end()) -
                                    log_post_.begin());
  }

  std::vector<double> run_length_posterior() const {
    std::vector<double> p(log_post_.size());
    std::transform(log_post_.begin(), log_post_.end(), p.begin(),
                   [](double l) { return std::exp(l); });
    return p;
  }

 private:
  double alpha(std::size_t r) const { return params_.prior.alpha0 + 0.5 * static_cast<double>(r); }

  // lgamma(alpha + 1/2) - lgamma(alpha) depends only on the run length.
  void ensure_gamma_terms(std::size_t n) {
    while (gamma_terms_.size() < n) {
      const double a = alpha(gamma_terms_.size());
      gamma_terms_.push_back(std::lgamma(a + 0.5) - std::lgamma(a));
    }
  }

  double log_predictive(std::size_t r, double x) const {
    const double a = alpha(r);
    const double nu = 2.0 * a;
    const double scale2 = beta_[r] * (kappa_[r] + 1.0) / (a * kappa_[r]);
    const double z = x - mu_[r];
    return gamma_terms_[r] - 0.5 * std::log(nu * std::numbers::pi * scale2) -
           (a + 0.5) * std::log1p(z * z / (nu * scale2));
  }

  BocdParams params_;
  double log_h_ = 0.0;
  double log_1mh_ = 0.0;
  std::vector<double> log_post_;
  std::vector<double> mu_, kappa_, beta_;
  std::vector<double> gamma_terms_;
  std::size_t steps_ = 0;
};

/// MAP run length after each observation.
inline std::vector<std::size_t> bocd_posterior(std::span<const double> series,
                                               const BocdParams& params) {
  if (series.size() < 2) throw ValidationError("changepoint detection needs at least 2 points");
  BocdFilter filter(params);
  std::vector<std::size_t> map;
  map.reserve(series.size());
  for (double x : series) {
    filter.update(x);
    map.push_back(filter.map_run_length());
  }
  return map;
}

/// Start indices of the regimes begun by MAP run-length resets, debounced by min_gap.
inline std::vector<std::size_t> detect_resets(std::span<const std::size_t> map,
                                              const BocdParams& params) {
  std::vector<std::size_t> locations;
  for (std::size_t t = 1; t < map.size(); ++t) {
    const auto r = map[t];
    const bool dropped = static_cast<double>(r) < params.reset_ratio * static_cast<double>(map[t - 1]);
    if (!dropped || r >= params.reset_max_run) continue;
    const std::size_t start = t + 1 - r;
    if (!locations.empty() &&
        static_cast<double>(start) - static_cast<double>(locations.back()) < params.min_gap)
      continue;
    locations.push_back(start);
  }
  return locations;
}

struct ChangepointResult {
  std::vector<double> series;  // per-second summed top-k file-API calls
  std::vector<std::size_t> map_run_lengths;
  std::vector<std::size_t> locations;
};

inline ChangepointResult detect_changepoints(const BinSeries& series, const BocdParams& params,
                                             const FileApiCatalogue& catalogue,
                                             std::size_t k = 10) {
  const auto basis = top_k_file_apis(series, catalogue, k);
  if (basis.empty()) throw UnscorableTrace(UnscorableTrace::Reason::no_file_activity);
  const BasisCounts counts(series, basis);

  ChangepointResult out;
  out.series.resize(counts.bins());
  std::vector<double> row(counts.k());
  for (std::size_t b = 0; b < counts.bins(); ++b) {
    counts.row(b, row);
    out.series[b] = std::accumulate(row.begin(), row.end(), 0.0);
  }
  out.map_run_lengths = bocd_posterior(out.series, params);
  out.locations = detect_resets(out.map_run_lengths, params);
  return out;
}

inline std::size_t count_changepoints(const Trace& trace, const BocdParams& params,
                                      const FileApiCatalogue& catalogue, std::size_t k = 10) {
  return detect_changepoints(bin_events(trace, 1.0), params, catalogue, k).locations.size();
}

}  // namespace rwprof
