#pragma once

// Deterministic synthetic traces shaped after observed ransomware and benign
// file-access behavior.
//
// Randomness comes from SplitMix64 only, so traces can be reproduced bit for
// bit in any language:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// uniform()  = (next() >> 11) * 2^-53
// normal()   = Box-Muller, cosine branch, u1 = 1 - uniform()
// poisson(l) = Knuth's product method for l < 64, else
//              max(0, round(l + sqrt(l) * normal()))
// The generator for a spec is seeded with seed ^ (0x5851F42D4C957F2D * (kind + 1)).

#include <rwprof/contrast.hpp>
#include <rwprof/corpus.hpp>
#include <rwprof/error.hpp>
#include <rwprof/native_format.hpp>
#include <rwprof/trace.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rwprof {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Mean-one log-normal multiplier.
  double lognormal(double sigma) { return std::exp(sigma * normal() - 0.5 * sigma * sigma); }

  std::uint64_t poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    if (lambda < 64.0) {
      const double limit = std::exp(-lambda);
      std::uint64_t k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    const double x = std::round(lambda + std::sqrt(lambda) * normal());
    return x < 0.0 ? 0 : static_cast<std::uint64_t>(x);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(next() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// n distinct elements of pool, in random order.
  template <typename T>
  std::vector<T> sample(std::vector<T> pool, std::size_t n) {
    shuffle(pool);
    pool.resize(std::min(n, pool.size()));
    return pool;
  }

 private:
  std::uint64_t state_;
};

enum class GenKind {
  ransomware,
  benign_random,
  copy,
  move,
  extract,
  compress,
  encrypt_tool,
  remove,  // "delete"
  git_like,
};

inline constexpr GenKind kAllGenKinds[] = {
    GenKind::ransomware, GenKind::benign_random, GenKind::copy,
    GenKind::move,       GenKind::extract,       GenKind::compress,
    GenKind::encrypt_tool, GenKind::remove,      GenKind::git_like};

inline std::string_view to_string(GenKind k) {
  switch (k) {
    case GenKind::ransomware: return "ransomware";
    case GenKind::benign_random: return "benign_random";
    case GenKind::copy: return "copy";
    case GenKind::move: return "move";
    case GenKind::extract: return "extract";
    case GenKind::compress: return "compress";
    case GenKind::encrypt_tool: return "encrypt_tool";
    case GenKind::remove: return "delete";
    case GenKind::git_like: return "git_like";
  }
  return "";
}

inline GenKind parse_gen_kind(std::string_view s) {
  for (auto k : kAllGenKinds)
    if (to_string(k) == s) return k;
  throw ValidationError("unknown trace kind '" + std::string(s) + "'");
}

inline Label label_for(GenKind k) {
  return k == GenKind::ransomware ? Label::ransomware : Label::benign;
}

struct GenSpec {
  GenKind kind = GenKind::ransomware;
  std::string id;          // defaults to "<kind>-<seed>"
  double duration = 120.0;  // seconds
  double rate = 2000.0;     // mean file-API calls per second
  std::size_t n_apis = 7;   // ransomware API combination size, clamped to [6, 10]
  std::uint64_t seed = 0;
  // Non-file APIs to inject at a low rate instead of the kind's default profile.
  std::optional<std::vector<std::string>> api_profile;

  std::string effective_id() const {
    return id.empty() ? std::string(to_string(kind)) + "-" + std::to_string(seed) : id;
  }

  void validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration))
      throw ValidationError("duration must be positive");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("rate must be positive");
    if (n_apis < 1) throw ValidationError("n_apis must be at least 1");
  }
};

namespace detail {

// Accumulates one trace second by second, merging injected non-file calls.
class TraceBuilder {
 public:
  TraceBuilder(Trace& trace, SplitMix64& rng) : trace_(trace), rng_(rng) {
    file_category_ = trace_.categories.intern("file");
  }

  SymbolId api(std::string_view name) { return trace_.apis.intern(name); }

  void inject(double ts, SymbolId api) { injected_.push_back({ts, api}); }

  void finish_injection() {
    std::stable_sort(injected_.begin(), injected_.end(),
                     [](const Pending& a, const Pending& b) { return a.ts < b.ts; });
  }

  /// Emits counts[i] calls to apis[i] in second s, randomly interleaved and
  /// evenly stratified over [s, s + len).
  void emit_second(std::size_t s, double len, std::span<const SymbolId> apis,
                   std::span<const std::uint64_t> counts) {
    order_.clear();
    for (std::size_t i = 0; i < apis.size(); ++i) order_.insert(order_.end(), counts[i], apis[i]);
    rng_.shuffle(order_);
    const double base = static_cast<double>(s);
    const double n = static_cast<double>(order_.size());
    std::size_t j = 0;
    for (const auto api : order_) {
      const double ts = base + len * (static_cast<double>(j) + rng_.uniform()) / n;
      flush_injected_before(ts);
      trace_.events.push_back({ts, api, file_category_});
      ++j;
    }
  }

  void finish() { flush_injected_before(std::numeric_limits<double>::infinity()); }

 private:
  struct Pending {
    double ts;
    SymbolId api;
  };

  void flush_injected_before(double ts) {
    while (next_injected_ < injected_.size() && injected_[next_injected_].ts <= ts) {
      trace_.events.push_back({injected_[next_injected_].ts, injected_[next_injected_].api,
                               kNoSymbol});
      ++next_injected_;
    }
  }

  Trace& trace_;
  SplitMix64& rng_;
  SymbolId file_category_;
  std::vector<Pending> injected_;
  std::size_t next_injected_ = 0;
  std::vector<SymbolId> order_;
};

// File APIs each kind draws from.
inline const std::vector<std::string>& ransomware_pool() {
  static const std::vector<std::string> pool = {
      "NtCreateFile",          "NtOpenFile",          "NtReadFile",
      "NtWriteFile",           "NtQueryInformationFile", "NtSetInformationFile",
      "SetFilePointerEx",      "GetFileSizeEx",       "NtQueryDirectoryFile",
      "MoveFileWithProgressW", "FindFirstFileExW",    "GetFileType"};
  return pool;
}

inline const std::vector<std::string>& benign_pool() {
  static const std::vector<std::string> pool = {
      "NtCreateFile",         "NtOpenFile",           "NtReadFile",
      "NtWriteFile",          "NtQueryInformationFile", "NtSetInformationFile",
      "NtQueryAttributesFile", "NtQueryDirectoryFile", "NtDeviceIoControlFile",
      "SetFilePointer",       "SetFilePointerEx",     "GetFileType",
      "GetFileSize",          "GetFileSizeEx",        "GetFileInformationByHandle",
      "FindFirstFileExW",     "FindNextFileW",        "SetFileAttributesW",
      "CopyFileExW",          "CreateDirectoryW",     "SetEndOfFile",
      "SetFileTime"};
  return pool;
}

// Non-file APIs outside every contrast set, called by every kind.
inline const std::vector<std::string>& neutral_pool() {
  static const std::vector<std::string> pool = {
      "NtClose",          "LdrLoadDll",       "LdrGetProcedureAddress",
      "NtQuerySystemInformation", "RegOpenKeyExW", "RegQueryValueExW",
      "GetSystemTimeAsFileTime",  "NtDelayExecution", "GetSystemMetrics"};
  return pool;
}

template <typename Map>
std::vector<std::string> keys_of(const Map& m) {
  std::vector<std::string> out;
  for (const auto& kv : m) {
    if constexpr (requires { kv.first; }) out.push_back(kv.first);
    else out.push_back(kv);
  }
  return out;
}

inline std::vector<std::uint64_t> multinomial(SplitMix64& rng, std::uint64_t n,
                                              std::span<const double> weights) {
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cdf[i] = (acc += weights[i]);
  std::vector<std::uint64_t> counts(weights.size(), 0);
  for (std::uint64_t e = 0; e < n; ++e) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    ++counts[static_cast<std::size_t>(it - cdf.begin())];
  }
  return counts;
}

struct Composition {
  std::vector<SymbolId> apis;
  std::vector<double> weights;
};

inline Composition skewed_composition(SplitMix64& rng, TraceBuilder& b,
                                      const std::vector<std::string>& pool, std::size_t lo,
                                      std::size_t hi) {
  Composition c;
  const auto n = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(lo),
                                                       static_cast<std::int64_t>(hi)));
  for (const auto& name : rng.sample(pool, n)) {
    c.apis.push_back(b.api(name));
    const double u = rng.uniform();
    c.weights.push_back(u * u * u + 0.02);
  }
  return c;
}

inline Composition fixed_composition(SplitMix64& rng, TraceBuilder& b,
                                     std::span<const std::string> apis, double jitter) {
  Composition c;
  for (const auto& name : apis) {
    c.apis.push_back(b.api(name));
    c.weights.push_back(1.0 + jitter * (rng.uniform() - 0.5));
  }
  return c;
}

inline std::size_t whole_seconds(double duration) {
  return static_cast<std::size_t>(std::ceil(duration));
}

inline double second_length(double duration, std::size_t s) {
  return std::min(1.0, duration - static_cast<double>(s));
}

// Spreads `calls` invocations of api uniformly over the trace.
inline void inject_calls(SplitMix64& rng, TraceBuilder& b, double duration, std::string_view api,
                         std::uint64_t calls) {
  const auto id = b.api(api);
  for (std::uint64_t i = 0; i < calls; ++i) b.inject(rng.uniform() * duration, id);
}

inline void inject_default_profile(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec) {
  const auto model = builtin_model();
  const double scale = spec.duration / model.reference_duration;
  const auto r_apis = keys_of(model.set_r);
  const auto b_apis = keys_of(model.set_b);
  const auto o_apis = keys_of(model.set_o);

  std::size_t n_r = 0, n_o_hits = 0, n_b = 0;
  switch (spec.kind) {
    case GenKind::ransomware:
      n_r = static_cast<std::size_t>(rng.integer(4, 8));
      n_o_hits = static_cast<std::size_t>(rng.integer(1, 4));
      n_b = static_cast<std::size_t>(rng.integer(0, 6));
      break;
    case GenKind::git_like: {
      n_b = static_cast<std::size_t>(rng.integer(15, 18));
      const auto hits = static_cast<std::size_t>(rng.integer(0, 2));
      n_r = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(hits)));
      n_o_hits = hits - n_r;
      break;
    }
    default: {
      n_b = static_cast<std::size_t>(rng.integer(7, 17));
      const auto hits = static_cast<std::size_t>(rng.integer(0, 3));
      n_r = static_cast<std::size_t>(rng.integer(0, std::min<std::int64_t>(1, hits)));
      n_o_hits = hits - n_r;
      break;
    }
  }

  for (const auto& api : rng.sample(r_apis, n_r))
    inject_calls(rng, b, spec.duration, api, static_cast<std::uint64_t>(rng.integer(1, 20)));
  for (const auto& api : rng.sample(b_apis, n_b))
    inject_calls(rng, b, spec.duration, api, static_cast<std::uint64_t>(rng.integer(1, 20)));

  // O APIs: some above their scaled limit, a few present below it.
  auto o_order = rng.sample(o_apis, o_apis.size());
  const auto n_o_quiet = static_cast<std::size_t>(rng.integer(1, 3));
  for (std::size_t i = 0; i < o_order.size() && i < n_o_hits + n_o_quiet; ++i) {
    const double limit = model.set_o.at(o_order[i]) * scale;
    const double factor = i < n_o_hits ? rng.uniform(1.3, 3.0) : rng.uniform(0.1, 0.5);
    inject_calls(rng, b, spec.duration, o_order[i],
                 static_cast<std::uint64_t>(std::floor(limit * factor)) + (i < n_o_hits ? 1 : 0));
  }
}

inline void inject_background(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec) {
  for (const auto& api : neutral_pool()) {
    const auto calls = rng.poisson(spec.duration * rng.uniform(0.5, 3.0));
    inject_calls(rng, b, spec.duration, api, calls);
  }
  if (spec.api_profile) {
    const auto calls =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::round(spec.duration / 10.0)));
    for (const auto& api : *spec.api_profile) {
      if (api.empty()) throw ValidationError("api_profile entries must be non-empty");
      inject_calls(rng, b, spec.duration, api, calls);
    }
  } else {
    inject_default_profile(rng, b, spec);
  }
}

// Emits one second of calls split across a composition.
inline void emit_mix(SplitMix64& rng, TraceBuilder& b, std::size_t s, double len,
                     const Composition& c, double mean_calls) {
  const auto n = rng.poisson(mean_calls * len);
  const auto counts = multinomial(rng, n, c.weights);
  b.emit_second(s, len, c.apis, counts);
}

inline void gen_ransomware(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec) {
  const auto n = std::clamp<std::size_t>(spec.n_apis, 6, 10);
  const auto names = rng.sample(ransomware_pool(), n);
  const auto c = fixed_composition(rng, b, names, 0.2);
  const std::size_t onset = 2;  // brief reconnaissance before encryption starts
  for (std::size_t s = 0; s < whole_seconds(spec.duration); ++s) {
    const double mean = s < onset ? 0.05 * spec.rate : spec.rate;
    emit_mix(rng, b, s, second_length(spec.duration, s), c, mean);
  }
}

// A benign program's file APIs: 8-10 names from the benign pool.
inline std::vector<std::string> working_set(SplitMix64& rng) {
  return rng.sample(benign_pool(), static_cast<std::size_t>(rng.integer(8, 10)));
}

// Regimes of 12-30 s at log-uniform levels in [0.4, 2.5] x rate, composition
// redrawn every 2-5 s and jittered each second, bursty per-second volume,
// occasional idle seconds.
inline void emit_bursty(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec,
                        std::size_t from, std::size_t to,
                        const std::vector<std::string>& working_set) {
  std::size_t s = from;
  while (s < to) {
    const auto regime_end = std::min<std::size_t>(to, s + static_cast<std::size_t>(rng.integer(12, 30)));
    const double level = spec.rate * std::exp(rng.uniform(std::log(0.4), std::log(2.5)));
    while (s < regime_end) {
      const auto comp = skewed_composition(rng, b, working_set, 3, 8);
      const auto seg_end = std::min<std::size_t>(regime_end, s + static_cast<std::size_t>(rng.integer(2, 5)));
      for (; s < seg_end; ++s) {
        const double len = second_length(spec.duration, s);
        if (rng.uniform() < 0.1) continue;
        auto jittered = comp;
        for (auto& w : jittered.weights) w *= rng.lognormal(0.5);
        emit_mix(rng, b, s, len, jittered, level * rng.lognormal(0.6));
      }
    }
  }
}

// Repetitive 2-4 s runs over exactly three APIs separated by idle gaps.
inline void gen_copy_move(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec,
                          std::span<const std::string> apis) {
  const auto c = fixed_composition(rng, b, apis, 0.4);
  const auto total = whole_seconds(spec.duration);
  std::size_t s = 0;
  while (s < total) {
    const auto run_end = std::min<std::size_t>(total, s + static_cast<std::size_t>(rng.integer(2, 4)));
    const double level = spec.rate * rng.uniform(0.3, 1.5);
    for (; s < run_end; ++s) emit_mix(rng, b, s, second_length(spec.duration, s), c, level);
    s += static_cast<std::size_t>(rng.integer(1, 2));
  }
}

// Per-second volume factor of tool-style workloads: idle one second in ten,
// otherwise uniform on [0.25, 2.5].
inline double burst_multiplier(SplitMix64& rng) {
  if (rng.uniform() < 0.1) return 0.0;
  return rng.uniform(0.25, 2.5);
}

inline void gen_extract(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec) {
  const std::vector<std::string> minors = {"NtCreateFile", "NtReadFile", "NtQueryInformationFile",
                                           "SetFilePointerEx"};
  std::vector<SymbolId> ids = {b.api("NtWriteFile")};
  std::vector<double> minor_weights;
  for (const auto& m : minors) {
    ids.push_back(b.api(m));
    minor_weights.push_back(rng.uniform(0.5, 1.5));
  }
  for (std::size_t s = 0; s < whole_seconds(spec.duration); ++s) {
    const double len = second_length(spec.duration, s);
    const double burst = burst_multiplier(rng);
    if (burst == 0.0) continue;
    const auto n = rng.poisson(spec.rate * len * burst);
    const auto minor_total = static_cast<std::uint64_t>(std::floor(0.07 * static_cast<double>(n)));
    const auto minor_counts = multinomial(rng, minor_total, minor_weights);
    std::vector<std::uint64_t> counts = {n - minor_total};
    counts.insert(counts.end(), minor_counts.begin(), minor_counts.end());
    b.emit_second(s, len, ids, counts);
  }
}

// Preparation phase then operation phase, each with its own API set.
inline void gen_two_phase(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec,
                          std::span<const std::string> phase1, std::span<const std::string> phase2,
                          double phase1_share, double phase2_level) {
  const auto total = whole_seconds(spec.duration);
  const auto split = static_cast<std::size_t>(std::round(phase1_share * static_cast<double>(total)));
  const auto c1 = fixed_composition(rng, b, phase1, 0.6);
  const auto c2 = fixed_composition(rng, b, phase2, 0.6);
  for (std::size_t s = 0; s < total; ++s) {
    const double len = second_length(spec.duration, s);
    const double burst = burst_multiplier(rng);
    if (burst == 0.0) continue;
    Composition c = s < split ? c1 : c2;
    for (auto& w : c.weights) w *= rng.lognormal(0.3);
    const double level = s < split ? 0.6 * spec.rate : phase2_level * spec.rate;
    emit_mix(rng, b, s, len, c, level * burst);
  }
}

// Varied activity with one long steady period over six evenly used APIs.
inline void gen_git_like(SplitMix64& rng, TraceBuilder& b, const GenSpec& spec) {
  const auto total = whole_seconds(spec.duration);
  const auto steady_len = std::min<std::size_t>(
      total, std::max<std::size_t>(20, static_cast<std::size_t>(0.35 * static_cast<double>(total))));
  const auto steady_start = std::min<std::size_t>(
      total - steady_len, static_cast<std::size_t>(0.3 * static_cast<double>(total)));
  const std::vector<std::string> steady_apis = {"NtCreateFile", "NtOpenFile", "NtReadFile",
                                                "NtQueryInformationFile", "NtQueryAttributesFile",
                                                "NtQueryDirectoryFile"};
  const auto steady = fixed_composition(rng, b, steady_apis, 0.1);

  const auto apis = working_set(rng);
  emit_bursty(rng, b, spec, 0, steady_start, apis);
  for (std::size_t s = steady_start; s < steady_start + steady_len; ++s)
    emit_mix(rng, b, s, second_length(spec.duration, s), steady, 0.5 * spec.rate);
  emit_bursty(rng, b, spec, steady_start + steady_len, total, apis);
}

inline std::uint64_t kind_salt(GenKind k) {
  return 0x5851F42D4C957F2DULL * (static_cast<std::uint64_t>(k) + 1);
}

}  // namespace detail

/// Generates one trace. Equal specs yield identical traces.
inline Trace generate(const GenSpec& spec) {
  spec.validate();
  Trace trace;
  trace.id = spec.effective_id();
  trace.label = label_for(spec.kind);
  trace.declared_duration = spec.duration;

  SplitMix64 rng(spec.seed ^ detail::kind_salt(spec.kind));
  detail::TraceBuilder b(trace, rng);
  detail::inject_background(rng, b, spec);
  b.finish_injection();

  switch (spec.kind) {
    case GenKind::ransomware: detail::gen_ransomware(rng, b, spec); break;
    case GenKind::benign_random:
      detail::emit_bursty(rng, b, spec, 0, detail::whole_seconds(spec.duration),
                          detail::working_set(rng));
      break;
    case GenKind::copy: {
      const std::vector<std::string> apis = {"NtCreateFile", "NtReadFile", "NtWriteFile"};
      detail::gen_copy_move(rng, b, spec, apis);
      break;
    }
    case GenKind::move: {
      const std::vector<std::string> apis = {"NtOpenFile", "NtSetInformationFile",
                                             "MoveFileWithProgressW"};
      detail::gen_copy_move(rng, b, spec, apis);
      break;
    }
    case GenKind::extract: detail::gen_extract(rng, b, spec); break;
    case GenKind::compress:
    case GenKind::encrypt_tool: {
      const std::vector<std::string> prep = {"NtOpenFile", "NtQueryDirectoryFile"};
      const std::vector<std::string> work = {"NtReadFile", "NtCreateFile",
                                             "GetFileInformationByHandle", "NtWriteFile"};
      detail::gen_two_phase(rng, b, spec, prep, work, 0.3, 1.0);
      break;
    }
    case GenKind::remove: {
      const std::vector<std::string> prep = {"NtQueryDirectoryFile", "NtOpenFile",
                                             "FindFirstFileExW"};
      const std::vector<std::string> work = {"NtSetInformationFile", "NtQueryAttributesFile",
                                             "DeleteFileW", "NtOpenFile"};
      detail::gen_two_phase(rng, b, spec, prep, work, 0.2, 0.4);
      break;
    }
    case GenKind::git_like: detail::gen_git_like(rng, b, spec); break;
  }
  b.finish();
  return trace;
}

/// The standard evaluation corpus: n_rw ransomware traces on seeds
/// first_seed.., then n_benign benign traces on the following seeds. The last
/// n_git benign slots are git_like; the rest cycle through the other benign
/// kinds.
inline std::vector<GenSpec> standard_corpus_specs(std::size_t n_rw = 50, std::size_t n_benign = 50,
                                                  std::size_t n_git = 5,
                                                  std::uint64_t first_seed = 1) {
  if (n_git > n_benign) throw ValidationError("git_like count exceeds benign count");
  constexpr GenKind kMixed[] = {GenKind::benign_random, GenKind::copy,     GenKind::move,
                                GenKind::extract,       GenKind::compress, GenKind::encrypt_tool,
                                GenKind::remove};
  std::vector<GenSpec> specs;
  std::uint64_t seed = first_seed;
  for (std::size_t i = 0; i < n_rw; ++i) {
    GenSpec s;
    s.kind = GenKind::ransomware;
    s.seed = seed++;
    specs.push_back(s);
  }
  for (std::size_t i = 0; i < n_benign; ++i) {
    GenSpec s;
    s.kind = i >= n_benign - n_git ? GenKind::git_like : kMixed[i % std::size(kMixed)];
    s.seed = seed++;
    specs.push_back(s);
  }
  return specs;
}

/// Generates every spec. Ids must be unique.
inline std::vector<Trace> generate_corpus(std::span<const GenSpec> specs) {
  if (specs.empty()) throw ValidationError("corpus manifest is empty");
  std::set<std::string> ids;
  for (const auto& s : specs)
    if (!ids.insert(s.effective_id()).second)
      throw ValidationError("duplicate trace id '" + s.effective_id() + "'");
  std::vector<Trace> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(generate(s));
  return out;
}

/// Writes <id>.jsonl per spec plus manifest.json into out_dir.
inline std::vector<ManifestEntry> write_corpus(std::span<const GenSpec> specs,
                                               const std::filesystem::path& out_dir) {
  if (specs.empty()) throw ValidationError("corpus manifest is empty");
  std::set<std::string> ids;
  for (const auto& s : specs)
    if (!ids.insert(s.effective_id()).second)
      throw ValidationError("duplicate trace id '" + s.effective_id() + "'");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<ManifestEntry> manifest;
  for (const auto& s : specs) {
    const auto trace = generate(s);
    const auto path = out_dir / (trace.id + ".jsonl");
    save_trace_native(trace, path);
    manifest.push_back({path, trace.label, std::string(to_string(s.kind)), s.seed, trace.id});
  }
  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

inline GenSpec gen_spec_from_json(const nlohmann::json& j) {
  GenSpec s;
  try {
    s.kind = parse_gen_kind(j.at("kind").get<std::string>());
    s.id = j.value("id", std::string());
    s.duration = j.value("duration", s.duration);
    s.rate = j.value("rate", s.rate);
    s.n_apis = j.value("n_apis", s.n_apis);
    s.seed = j.value("seed", s.seed);
    if (j.contains("api_profile")) s.api_profile = j["api_profile"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline std::vector<GenSpec> read_gen_specs(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("generator manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_array()) throw ValidationError("generator manifest must be a JSON array");
  std::vector<GenSpec> specs;
  for (const auto& row : j) specs.push_back(gen_spec_from_json(row));
  return specs;
}

}  // namespace rwprof
