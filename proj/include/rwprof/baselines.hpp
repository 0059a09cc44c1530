#pragma once

// Single-API distribution baselines: divergence between per-second call-count
// histograms, a Poisson rate likelihood, and the Wilcoxon rank-sum test.

#include <rwprof/error.hpp>
#include <rwprof/trace.hpp>
#include <rwprof/windowing.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace rwprof {

/// Count buckets defined by inclusive upper bounds; a final bucket catches
/// everything above the last bound.
struct Bucketing {
  std::vector<std::uint64_t> upper_bounds;

  /// {0}, {1-10}, {11-100}, {101-1000}, {1001-10000}, {>10000}
  static Bucketing geometric() { return {{0, 10, 100, 1000, 10000}}; }

  void validate() const {
    if (upper_bounds.empty()) throw ValidationError("bucketing needs at least one bound");
    for (std::size_t i = 1; i < upper_bounds.size(); ++i)
      if (upper_bounds[i] <= upper_bounds[i - 1])
        throw ValidationError("bucket bounds must be strictly increasing");
  }

  std::size_t size() const noexcept { return upper_bounds.size() + 1; }

  std::size_t bucket(std::uint64_t count) const {
    return static_cast<std::size_t>(
        std::lower_bound(upper_bounds.begin(), upper_bounds.end(), count) - upper_bounds.begin());
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    std::uint64_t lo = 0;
    for (auto hi : upper_bounds) {
      out.push_back(lo == hi ? std::to_string(hi) : std::to_string(lo) + "-" + std::to_string(hi));
      lo = hi + 1;
    }
    out.push_back(">" + std::to_string(upper_bounds.back()));
    return out;
  }
};

struct FrequencyDistribution {
  std::string api;
  std::vector<std::string> support;
  std::vector<double> probs;
};

struct DistributionResult {
  FrequencyDistribution distribution;
  std::vector<std::string> warnings;
};

/// Per-second counts of `api` over the seconds in which it was called.
inline std::vector<std::uint64_t> active_second_counts(const BinSeries& series,
                                                       std::string_view api) {
  std::vector<std::uint64_t> out;
  const auto id = series.find_api(api);
  if (!id) return out;
  for (std::size_t b = 0; b < series.total_bins(); ++b) {
    const auto c = series.count(b, *id);
    if (c > 0) out.push_back(c);
  }
  return out;
}

/// Histogram of per-active-second counts pooled over the given series,
/// normalized to probabilities. An API never called yields a point mass on
/// the zero bucket and a warning.
inline DistributionResult api_frequency_distribution(std::span<const BinSeries> corpus,
                                                     std::string_view api,
                                                     const Bucketing& bucketing) {
  bucketing.validate();
  DistributionResult r;
  r.distribution.api = std::string(api);
  r.distribution.support = bucketing.labels();
  std::vector<double> hist(bucketing.size(), 0.0);
  double n = 0.0;
  for (const auto& s : corpus) {
    for (auto c : active_second_counts(s, api)) {
      hist[bucketing.bucket(c)] += 1.0;
      n += 1.0;
    }
  }
  if (n == 0.0) {
    r.warnings.push_back("api '" + std::string(api) + "' is never called");
    hist[bucketing.bucket(0)] = 1.0;
    n = 1.0;
  }
  for (auto& h : hist) h /= n;
  r.distribution.probs = std::move(hist);
  return r;
}

inline DistributionResult api_frequency_distribution(const Trace& trace, std::string_view api,
                                                     const Bucketing& bucketing) {
  const BinSeries s = bin_events(trace, 1.0);
  return api_frequency_distribution(std::span<const BinSeries>(&s, 1), api, bucketing);
}

inline DistributionResult api_frequency_distribution(std::span<const Trace> corpus,
                                                     std::string_view api,
                                                     const Bucketing& bucketing) {
  std::vector<BinSeries> series;
  series.reserve(corpus.size());
  for (const auto& t : corpus) series.push_back(bin_events(t, 1.0));
  return api_frequency_distribution(series, api, bucketing);
}

inline constexpr double kSmoothingEpsilon = 1e-9;

namespace detail {

inline void require_distribution(std::span<const double> p) {
  for (double x : p)
    if (!(x >= 0.0)) throw ValidationError("probabilities must be non-negative");
}

inline std::vector<double> smooth(std::span<const double> p) {
  std::vector<double> out(p.begin(), p.end());
  const double denom = 1.0 + kSmoothingEpsilon * static_cast<double>(p.size());
  for (auto& x : out) x = (x + kSmoothingEpsilon) / denom;
  return out;
}

}  // namespace detail

/// Natural-log KL(P || Q) with 0 log 0 = 0. When some cell has q = 0 < p, both
/// inputs receive additive epsilon smoothing and renormalization first.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("distributions must share a support");
  detail::require_distribution(p);
  detail::require_distribution(q);

  bool needs_smoothing = false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0 && q[i] == 0.0) needs_smoothing = true;

  auto sum_terms = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] > 0.0) s += a[i] * std::log(a[i] / b[i]);
    return s;
  };
  if (!needs_smoothing) return sum_terms(p, q);
  const auto ps = detail::smooth(p);
  const auto qs = detail::smooth(q);
  return sum_terms(ps, qs);
}

enum class JsVariant {
  as_printed,  // 1/2 KL(P||M) + 1/2 KL(M||P)
  standard,    // 1/2 KL(P||M) + 1/2 KL(Q||M)
};

inline std::vector<double> midpoint(std::span<const double> p, std::span<const double> q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return m;
}

inline double js_divergence(std::span<const double> p, std::span<const double> q,
                            JsVariant variant = JsVariant::as_printed) {
  if (p.size() != q.size()) throw ValidationError("distributions must share a support");
  const auto m = midpoint(p, q);
  const double left = kl_divergence(p, m);
  const double right = variant == JsVariant::as_printed ? kl_divergence(m, p) : kl_divergence(q, m);
  return 0.5 * left + 0.5 * right;
}

namespace detail {

inline void require_same_support(const FrequencyDistribution& p, const FrequencyDistribution& q) {
  if (p.support != q.support || p.probs.size() != q.probs.size())
    throw ValidationError("distributions must share a support");
}

}  // namespace detail

inline double kl_divergence(const FrequencyDistribution& p, const FrequencyDistribution& q) {
  detail::require_same_support(p, q);
  return kl_divergence(std::span<const double>(p.probs), std::span<const double>(q.probs));
}

inline double js_divergence(const FrequencyDistribution& p, const FrequencyDistribution& q,
                            JsVariant variant = JsVariant::as_printed) {
  detail::require_same_support(p, q);
  return js_divergence(std::span<const double>(p.probs), std::span<const double>(q.probs),
                       variant);
}

struct RankSumResult {
  double u;        // Mann-Whitney U for the first sample
  double z;        // normal approximation, continuity corrected
  double p_value;  // two-sided
};

/// Wilcoxon rank-sum / Mann-Whitney U with midranks for ties and the tie-corrected
/// normal approximation.
inline RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("rank-sum test needs two non-empty samples");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  struct Obs {
    double v;
    bool first;
  };
  std::vector<Obs> all;
  all.reserve(n);
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Obs& x, const Obs& y) { return x.v < y.v; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].v == all[i].v) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].first) rank_sum_a += midrank;
    i = j;
  }

  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2),
               dn = static_cast<double>(n);
  const double u = rank_sum_a - d1 * (d1 + 1.0) / 2.0;
  const double mean = d1 * d2 / 2.0;
  double var = d1 * d2 / 12.0 * (dn + 1.0);
  if (n > 1) var = d1 * d2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));

  RankSumResult r{u, 0.0, 1.0};
  if (var > 0.0) {
    const double diff = std::max(0.0, std::abs(u - mean) - 0.5);
    r.z = std::copysign(diff / std::sqrt(var), u - mean);
    r.p_value = std::min(1.0, std::erfc(std::abs(r.z) / std::numbers::sqrt2));
  }
  return r;
}

/// Mean Poisson log-likelihood of the counts at the reference rate.
inline double poisson_rate_score(std::span<const std::int64_t> counts, double reference_rate) {
  if (!(reference_rate > 0.0)) throw ValidationError("reference rate must be positive");
  if (counts.empty()) throw ValidationError("poisson score needs at least one count");
  const double log_rate = std::log(reference_rate);
  double s = 0.0;
  for (auto k : counts) {
    if (k < 0) throw ValidationError("counts must be non-negative");
    const double dk = static_cast<double>(k);
    s += dk * log_rate - reference_rate - std::lgamma(dk + 1.0);
  }
  return s / static_cast<double>(counts.size());
}

}  // namespace rwprof
