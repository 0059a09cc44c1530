#pragma once

// File-API consistency: distance between the per-second composition of a
// current window and the window immediately before it. Lower is more
// consistent, i.e. more ransomware-like.

#include <rwprof/error.hpp>
#include <rwprof/trace.hpp>
#include <rwprof/windowing.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rwprof {

enum class Metric { cosine, manhattan, weighted, euclidean };

inline constexpr Metric kAllMetrics[] = {Metric::cosine, Metric::manhattan, Metric::weighted,
                                         Metric::euclidean};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::cosine: return "cosine";
    case Metric::manhattan: return "manhattan";
    case Metric::weighted: return "weighted";
    case Metric::euclidean: return "euclidean";
  }
  return "";
}

inline Metric parse_metric(std::string_view s) {
  for (auto m : kAllMetrics)
    if (to_string(m) == s) return m;
  throw ValidationError("unknown metric '" + std::string(s) + "'");
}

enum class Aggregate { min, mean };

inline std::string_view to_string(Aggregate a) { return a == Aggregate::min ? "min" : "mean"; }

inline Aggregate parse_aggregate(std::string_view s) {
  if (s == "min") return Aggregate::min;
  if (s == "mean") return Aggregate::mean;
  throw ValidationError("unknown aggregate '" + std::string(s) + "'");
}

struct ConsistencyParams {
  Metric metric = Metric::manhattan;
  double prev_len = 3.0;  // seconds
  double curr_len = 1.0;  // seconds
  std::size_t k = 10;
  std::size_t smooth_w = 5;
  Aggregate aggregate = Aggregate::min;

  void validate() const {
    if (!(prev_len > 0.0) || !(curr_len > 0.0))
      throw ValidationError("window lengths must be positive");
    if (k < 1) throw ValidationError("k must be at least 1");
    if (smooth_w < 1) throw ValidationError("smoothing width must be at least 1");
  }
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("vectors must share the same API basis");
}

}  // namespace detail

/// 1 - cos(c, p). Undefined (nullopt) when either vector is all-zero.
inline std::optional<double> cosine_consistency(std::span<const double> c,
                                                std::span<const double> p) {
  detail::require_same_size(c.size(), p.size());
  double dot = 0.0, cc = 0.0, pp = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    dot += c[i] * p[i];
    cc += c[i] * c[i];
    pp += p[i] * p[i];
  }
  if (cc == 0.0 || pp == 0.0) return std::nullopt;
  const double sim = dot / (std::sqrt(cc) * std::sqrt(pp));
  return std::max(0.0, 1.0 - sim);
}

inline double manhattan_consistency(std::span<const double> c, std::span<const double> p) {
  detail::require_same_size(c.size(), p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += std::abs(c[i] - p[i]);
  return s;
}

/// Frequency-weighted L1: sum f_i |c_i - p_i|.
inline double weighted_consistency(std::span<const double> c, std::span<const double> p,
                                   std::span<const double> f) {
  detail::require_same_size(c.size(), p.size());
  if (f.size() != c.size()) throw ValidationError("weight vector length must match the basis");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (f[i] < 0.0) throw ValidationError("weights must be non-negative");
    s += f[i] * std::abs(c[i] - p[i]);
  }
  return s;
}

inline double euclidean_consistency(std::span<const double> c, std::span<const double> p) {
  detail::require_same_size(c.size(), p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = c[i] - p[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace detail {

inline void require_same_basis(const WindowVector& c, const WindowVector& p) {
  if (c.apis != p.apis || c.values.size() != p.values.size())
    throw ValidationError("window vectors must share the same API basis");
}

}  // namespace detail

inline std::optional<double> cosine_consistency(const WindowVector& c, const WindowVector& p) {
  detail::require_same_basis(c, p);
  return cosine_consistency(std::span<const double>(c.values), std::span<const double>(p.values));
}

inline double manhattan_consistency(const WindowVector& c, const WindowVector& p) {
  detail::require_same_basis(c, p);
  return manhattan_consistency(std::span<const double>(c.values),
                               std::span<const double>(p.values));
}

inline double weighted_consistency(const WindowVector& c, const WindowVector& p,
                                   std::span<const double> f) {
  detail::require_same_basis(c, p);
  return weighted_consistency(std::span<const double>(c.values),
                              std::span<const double>(p.values), f);
}

inline double euclidean_consistency(const WindowVector& c, const WindowVector& p) {
  detail::require_same_basis(c, p);
  return euclidean_consistency(std::span<const double>(c.values),
                               std::span<const double>(p.values));
}

/// Share of each basis API among all basis calls over the whole trace; sums to 1.
inline std::vector<double> frequency_weights(std::span<const double> totals) {
  const double sum = std::accumulate(totals.begin(), totals.end(), 0.0);
  std::vector<double> f(totals.size(), 0.0);
  if (sum > 0.0)
    for (std::size_t i = 0; i < totals.size(); ++i) f[i] = totals[i] / sum;
  return f;
}

struct WindowScore {
  double window_start;  // start of the previous window
  double score;
};

struct TraceScore {
  Metric metric = Metric::manhattan;
  std::vector<std::string> basis;
  std::vector<WindowScore> per_window;
  std::vector<double> smoothed;  // rolling mean over smooth_w consecutive scored windows
  double aggregate = 0.0;
  // Time span covered by the smoothing group with the lowest smoothed score.
  double best_span_start = 0.0;
  double best_span_end = 0.0;
  double best_score = 0.0;
};

/// Rolling mean with window w; a series shorter than w collapses to its mean.
inline std::vector<double> rolling_mean(std::span<const double> xs, std::size_t w) {
  if (xs.empty()) return {};
  if (xs.size() <= w) {
    return {std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size())};
  }
  // Summed directly per window: a running sum drifts below zero on all-zero stretches.
  std::vector<double> out;
  out.reserve(xs.size() - w + 1);
  for (std::size_t i = 0; i + w <= xs.size(); ++i) {
    const auto first = xs.begin() + static_cast<std::ptrdiff_t>(i);
    out.push_back(std::accumulate(first, first + static_cast<std::ptrdiff_t>(w), 0.0) /
                  static_cast<double>(w));
  }
  return out;
}

/// Slides a (prev_len + curr_len) frame one second at a time and scores the
/// current window against the previous one over the trace's top-k file APIs.
inline TraceScore trace_consistency(const BinSeries& series, const ConsistencyParams& params,
                                    const FileApiCatalogue& catalogue) {
  params.validate();
  const double frame = params.prev_len + params.curr_len;
  if (series.span() < frame) throw UnscorableTrace(UnscorableTrace::Reason::insufficient_duration);

  TraceScore out;
  out.metric = params.metric;
  out.basis = top_k_file_apis(series, catalogue, params.k);
  if (out.basis.empty()) throw UnscorableTrace(UnscorableTrace::Reason::no_file_activity);

  const BasisCounts counts(series, out.basis);
  const std::size_t k = counts.k();
  const auto totals = counts.totals();
  const auto weights = frequency_weights(totals);
  const double bw = series.bin_width();
  const std::size_t n_bins = series.total_bins();

  std::vector<double> prev(k), curr(k);
  constexpr double kStride = 1.0;
  for (double t = 0.0; t + frame <= series.span() + 1e-9; t += kStride) {
    const auto [p0, p1] = detail::bins_covering(bw, n_bins, t, params.prev_len);
    const auto [c0, c1] = detail::bins_covering(bw, n_bins, t + params.prev_len, params.curr_len);
    counts.sum(p0, p1, prev);
    counts.sum(c0, c1, curr);
    const bool prev_zero = std::all_of(prev.begin(), prev.end(), [](double v) { return v == 0.0; });
    const bool curr_zero = std::all_of(curr.begin(), curr.end(), [](double v) { return v == 0.0; });
    if (prev_zero && curr_zero) continue;
    for (auto& v : prev) v /= params.prev_len;
    for (auto& v : curr) v /= params.curr_len;

    double score = 0.0;
    switch (params.metric) {
      case Metric::cosine: {
        const auto s = cosine_consistency(curr, prev);
        if (!s) continue;
        score = *s;
        break;
      }
      case Metric::manhattan: score = manhattan_consistency(curr, prev); break;
      case Metric::weighted: score = weighted_consistency(curr, prev, weights); break;
      case Metric::euclidean: score = euclidean_consistency(curr, prev); break;
    }
    out.per_window.push_back({t, score});
  }
  if (out.per_window.empty()) throw UnscorableTrace(UnscorableTrace::Reason::no_file_activity);

  std::vector<double> raw;
  raw.reserve(out.per_window.size());
  for (const auto& w : out.per_window) raw.push_back(w.score);
  out.smoothed = rolling_mean(raw, params.smooth_w);

  const auto best = std::min_element(out.smoothed.begin(), out.smoothed.end());
  const auto best_i = static_cast<std::size_t>(best - out.smoothed.begin());
  const auto last_i = std::min(best_i + params.smooth_w, out.per_window.size()) - 1;
  out.best_score = *best;
  out.best_span_start = out.per_window[best_i].window_start;
  out.best_span_end = out.per_window[last_i].window_start + frame;

  out.aggregate = params.aggregate == Aggregate::min
                      ? *best
                      : std::accumulate(out.smoothed.begin(), out.smoothed.end(), 0.0) /
                            static_cast<double>(out.smoothed.size());
  return out;
}

inline TraceScore trace_consistency(const Trace& trace, const ConsistencyParams& params,
                                    const FileApiCatalogue& catalogue) {
  return trace_consistency(bin_events(trace, 1.0), params, catalogue);
}

}  // namespace rwprof
