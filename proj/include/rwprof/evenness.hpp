#pragma once

#include <rwprof/error.hpp>
#include <rwprof/trace.hpp>
#include <rwprof/windowing.hpp>

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rwprof {

enum class EvennessKind { normalized, squared };

inline std::string_view to_string(EvennessKind k) {
  return k == EvennessKind::normalized ? "normalized" : "squared";
}

/// normalized: sum |x_i - avg| / avg.  squared: sum (x_i - avg)^2.
/// Zero means every API was called equally often. Normalized evenness of an
/// all-zero bin is undefined and returns nullopt.
inline std::optional<double> bin_evenness(std::span<const double> counts, EvennessKind kind) {
  if (counts.empty()) throw ValidationError("evenness needs at least one count");
  const double avg =
      std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
  double s = 0.0;
  if (kind == EvennessKind::normalized) {
    if (avg == 0.0) return std::nullopt;
    for (double x : counts) s += std::abs(x - avg);
    return s / avg;
  }
  for (double x : counts) s += (x - avg) * (x - avg);
  return s;
}

struct EvennessResult {
  EvennessKind kind = EvennessKind::normalized;
  std::vector<std::pair<std::size_t, double>> per_bin;  // (bin index, value)
  double average = 0.0;
};

/// Evenness of every 1-second bin with top-k activity, averaged over those bins.
inline EvennessResult trace_evenness(const BinSeries& series, EvennessKind kind,
                                     const FileApiCatalogue& catalogue, std::size_t k = 10) {
  const auto basis = top_k_file_apis(series, catalogue, k);
  if (basis.empty()) throw UnscorableTrace(UnscorableTrace::Reason::no_file_activity);
  const BasisCounts counts(series, basis);

  EvennessResult out;
  out.kind = kind;
  std::vector<double> row(counts.k());
  double sum = 0.0;
  for (std::size_t b = 0; b < counts.bins(); ++b) {
    counts.row(b, row);
    if (std::accumulate(row.begin(), row.end(), 0.0) == 0.0) continue;
    const double v = *bin_evenness(row, kind);
    out.per_bin.emplace_back(b, v);
    sum += v;
  }
  if (out.per_bin.empty()) throw UnscorableTrace(UnscorableTrace::Reason::no_file_activity);
  out.average = sum / static_cast<double>(out.per_bin.size());
  return out;
}

inline EvennessResult trace_evenness(const Trace& trace, EvennessKind kind,
                                     const FileApiCatalogue& catalogue, std::size_t k = 10) {
  return trace_evenness(bin_events(trace, 1.0), kind, catalogue, k);
}

}  // namespace rwprof
