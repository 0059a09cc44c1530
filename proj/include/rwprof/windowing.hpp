#pragma once

#include <rwprof/error.hpp>
#include <rwprof/native_format.hpp>
#include <rwprof/trace.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rwprof {

/// Names of the APIs treated as file-related.
class FileApiCatalogue {
 public:
  explicit FileApiCatalogue(std::set<std::string, std::less<>> names) : names_(std::move(names)) {
    if (names_.empty()) throw ValidationError("file API catalogue must not be empty");
  }

  static FileApiCatalogue defaults() {
    return FileApiCatalogue({
        "NtCreateFile",        "NtOpenFile",
        "NtReadFile",          "NtWriteFile",
        "NtDeleteFile",        "NtQueryDirectoryFile",
        "NtQueryInformationFile", "NtSetInformationFile",
        "NtQueryAttributesFile",  "NtDeviceIoControlFile",
        "SetFilePointer",      "SetFilePointerEx",
        "GetFileType",         "GetFileSize",
        "GetFileSizeEx",       "GetFileInformationByHandle",
        "GetFileInformationByHandleEx", "FindFirstFileExW",
        "FindNextFileW",       "SetFileAttributesW",
        "MoveFileWithProgressW", "CopyFileExW",
        "DeleteFileW",         "CreateDirectoryW",
        "RemoveDirectoryA",    "RemoveDirectoryW",
        "SetEndOfFile",        "SetFileTime",
    });
  }

  /// One name per line; '#' starts a comment; surrounding whitespace ignored.
  static FileApiCatalogue parse(std::istream& in) {
    std::set<std::string, std::less<>> names;
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto e = line.find_last_not_of(" \t\r");
      names.insert(line.substr(b, e - b + 1));
    }
    return FileApiCatalogue(std::move(names));
  }

  static FileApiCatalogue load(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return parse(in);
  }

  bool contains(std::string_view api) const { return names_.find(api) != names_.end(); }
  const std::set<std::string, std::less<>>& names() const noexcept { return names_; }

 private:
  std::set<std::string, std::less<>> names_;
};

struct ApiCount {
  SymbolId api;
  std::uint64_t count;
};

/// Per-bin per-API call counts. Bin b covers [b * width, (b + 1) * width).
/// Stored sparsely: each bin lists its non-zero (api, count) pairs sorted by api.
class BinSeries {
 public:
  double bin_width() const noexcept { return bin_width_; }
  std::size_t total_bins() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  double span() const noexcept { return static_cast<double>(total_bins()) * bin_width_; }

  std::span<const ApiCount> bin(std::size_t b) const {
    return {entries_.data() + offsets_.at(b), entries_.data() + offsets_.at(b + 1)};
  }

  std::uint64_t count(std::size_t b, SymbolId api) const {
    auto row = bin(b);
    auto it = std::lower_bound(row.begin(), row.end(), api,
                               [](const ApiCount& c, SymbolId id) { return c.api < id; });
    return (it != row.end() && it->api == api) ? it->count : 0;
  }

  std::uint64_t total(SymbolId api) const { return api < totals_.size() ? totals_[api] : 0; }
  std::uint64_t total_events() const noexcept { return total_events_; }

  const std::vector<std::string>& api_names() const noexcept { return names_; }

  std::optional<SymbolId> find_api(std::string_view name) const {
    for (SymbolId i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

 private:
  friend BinSeries bin_events(const Trace&, double);

  double bin_width_ = 1.0;
  std::vector<std::size_t> offsets_;
  std::vector<ApiCount> entries_;
  std::vector<std::uint64_t> totals_;
  std::vector<std::string> names_;
  std::uint64_t total_events_ = 0;
};

/// Bins events by floor(ts / bin_width). The series covers every bin holding an
/// event and, when the trace declares a duration, ceil(duration / bin_width) bins.
inline BinSeries bin_events(const Trace& trace, double bin_width = 1.0) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width))
    throw ValidationError("bin width must be positive");

  BinSeries s;
  s.bin_width_ = bin_width;
  s.names_ = trace.apis.names();
  s.totals_.assign(trace.apis.size(), 0);
  s.total_events_ = trace.events.size();

  std::size_t n_bins = 0;
  if (trace.declared_duration)
    n_bins = static_cast<std::size_t>(std::ceil(*trace.declared_duration / bin_width));

  // (bin, api) per event, ordered by bin. Sorted traces are already ordered.
  std::vector<std::pair<std::size_t, SymbolId>> keyed;
  keyed.reserve(trace.events.size());
  for (const auto& e : trace.events) {
    const auto b = static_cast<std::size_t>(std::floor(e.ts / bin_width));
    keyed.emplace_back(b, e.api);
    n_bins = std::max(n_bins, b + 1);
  }
  if (!trace.is_sorted()) {
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  s.offsets_.assign(n_bins + 1, 0);
  std::vector<std::uint64_t> scratch(trace.apis.size(), 0);
  std::vector<SymbolId> touched;
  std::size_t i = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    s.offsets_[b] = s.entries_.size();
    touched.clear();
    for (; i < keyed.size() && keyed[i].first == b; ++i) {
      const auto api = keyed[i].second;
      if (scratch[api]++ == 0) touched.push_back(api);
    }
    std::sort(touched.begin(), touched.end());
    for (auto api : touched) {
      s.entries_.push_back({api, scratch[api]});
      s.totals_[api] += scratch[api];
      scratch[api] = 0;
    }
  }
  s.offsets_[n_bins] = s.entries_.size();
  return s;
}

/// The k catalogue APIs with the highest totals, descending; ties by name.
inline std::vector<std::string> top_k_file_apis(const BinSeries& series,
                                                const FileApiCatalogue& catalogue,
                                                std::size_t k) {
  if (k < 1) throw ValidationError("k must be at least 1");
  struct Candidate {
    const std::string* name;
    std::uint64_t total;
  };
  std::vector<Candidate> candidates;
  const auto& names = series.api_names();
  for (SymbolId id = 0; id < names.size(); ++id) {
    const auto total = series.total(id);
    if (total > 0 && catalogue.contains(names[id])) candidates.push_back({&names[id], total});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.total != b.total ? a.total > b.total : *a.name < *b.name;
  });
  if (candidates.size() > k) candidates.resize(k);
  std::vector<std::string> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(*c.name);
  return out;
}

/// Per-second rate composition over a fixed API basis.
struct WindowVector {
  std::vector<std::string> apis;
  std::vector<double> values;
  double window_start = 0.0;
  double window_len = 0.0;
};

namespace detail {

// Bins whose start time lies in [start, start + len).
inline std::pair<std::size_t, std::size_t> bins_covering(double bin_width, std::size_t total_bins,
                                                         double start, double len) {
  const auto first = static_cast<std::size_t>(std::ceil(start / bin_width));
  const auto last = static_cast<std::size_t>(std::ceil((start + len) / bin_width));
  return {std::min(first, total_bins), std::min(last, total_bins)};
}

inline std::vector<SymbolId> resolve_basis(const BinSeries& series,
                                           std::span<const std::string> apis) {
  std::vector<SymbolId> ids;
  ids.reserve(apis.size());
  for (const auto& name : apis) ids.push_back(series.find_api(name).value_or(kNoSymbol));
  return ids;
}

}  // namespace detail

/// values[i] = (calls to apis[i] in bins covering [start, start + len)) / len.
/// Bins past the end of the series contribute nothing.
inline WindowVector window_vector(const BinSeries& series, std::span<const std::string> apis,
                                  double start, double len) {
  if (!(len > 0.0)) throw ValidationError("window length must be positive");
  if (!(start >= 0.0)) throw ValidationError("window start must be non-negative");
  if (apis.empty()) throw ValidationError("window basis must not be empty");

  WindowVector w;
  w.apis.assign(apis.begin(), apis.end());
  w.values.assign(apis.size(), 0.0);
  w.window_start = start;
  w.window_len = len;

  const auto ids = detail::resolve_basis(series, apis);
  const auto [first, last] =
      detail::bins_covering(series.bin_width(), series.total_bins(), start, len);
  for (std::size_t b = first; b < last; ++b) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != kNoSymbol) w.values[i] += static_cast<double>(series.count(b, ids[i]));
    }
  }
  for (auto& v : w.values) v /= len;
  return w;
}

/// Dense bins x basis matrix of counts, row-major, plus running prefix sums
/// so any bin range can be summed in O(K).
class BasisCounts {
 public:
  BasisCounts(const BinSeries& series, std::span<const std::string> apis)
      : k_(apis.size()), bins_(series.total_bins()), prefix_((bins_ + 1) * k_, 0.0) {
    const auto ids = detail::resolve_basis(series, apis);
    std::vector<std::size_t> column(series.api_names().size(), k_);
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] != kNoSymbol) column[ids[i]] = i;
    for (std::size_t b = 0; b < bins_; ++b) {
      double* row = &prefix_[(b + 1) * k_];
      const double* prev = &prefix_[b * k_];
      std::copy(prev, prev + k_, row);
      for (const auto& c : series.bin(b)) {
        if (column[c.api] < k_) row[column[c.api]] += static_cast<double>(c.count);
      }
    }
  }

  std::size_t k() const noexcept { return k_; }
  std::size_t bins() const noexcept { return bins_; }

  /// out[i] = calls to basis API i over bins [first, last).
  void sum(std::size_t first, std::size_t last, std::span<double> out) const {
    const double* hi = &prefix_[last * k_];
    const double* lo = &prefix_[first * k_];
    for (std::size_t i = 0; i < k_; ++i) out[i] = hi[i] - lo[i];
  }

  /// Counts of bin b.
  void row(std::size_t b, std::span<double> out) const { sum(b, b + 1, out); }

  std::vector<double> totals() const {
    std::vector<double> t(k_);
    sum(0, bins_, t);
    return t;
  }

 private:
  std::size_t k_;
  std::size_t bins_;
  std::vector<double> prefix_;
};

}  // namespace rwprof
