#pragma once

// API contrast score. Training sorts non-file APIs into three sets from a
// labeled corpus:
//   R  ransomware-prevalent          +1 when present
//   O  shared, far more frequent in  +1 when total calls exceed the API's
//      ransomware                       limit scaled to the trace duration
//   B  benign-prevalent              -1 when present
// Every distinct API counts once.

#include <rwprof/error.hpp>
#include <rwprof/native_format.hpp>
#include <rwprof/trace.hpp>
#include <rwprof/windowing.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rwprof {

inline constexpr double kReferenceDuration = 300.0;

struct ApiOccurrence {
  std::size_t occr_r = 0;  // ransomware traces calling the API
  std::size_t occr_b = 0;  // benign traces calling the API
  double freq_r_mean = 0.0;  // mean calls per reference duration over those traces
  double freq_b_mean = 0.0;
};

struct CorpusStats {
  std::size_t n_r = 0;
  std::size_t n_b = 0;
  double reference_duration = kReferenceDuration;
  std::map<std::string, ApiOccurrence, std::less<>> apis;

  ApiOccurrence at(std::string_view api) const {
    auto it = apis.find(api);
    return it == apis.end() ? ApiOccurrence{} : it->second;
  }
};

/// Occurrence counts and mean per-trace call frequencies, with each trace's
/// totals rescaled to the reference duration.
inline CorpusStats collect_corpus_stats(std::span<const Trace> corpus,
                                        double reference_duration = kReferenceDuration) {
  if (!(reference_duration > 0.0)) throw ValidationError("reference duration must be positive");
  CorpusStats stats;
  stats.reference_duration = reference_duration;
  std::map<std::string, std::pair<double, double>, std::less<>> freq_sums;  // (rw, benign)

  for (const auto& trace : corpus) {
    if (trace.label == Label::unknown)
      throw ValidationError("trace '" + trace.id + "' has no label");
    const bool rw = trace.label == Label::ransomware;
    (rw ? stats.n_r : stats.n_b) += 1;
    const double duration = trace.effective_duration();
    const double scale = duration > 0.0 ? reference_duration / duration : 1.0;
    const auto totals = trace.api_totals();
    for (SymbolId id = 0; id < totals.size(); ++id) {
      if (totals[id] == 0) continue;
      const auto& name = trace.apis.name(id);
      auto& row = stats.apis[name];
      auto& sums = freq_sums[name];
      const double f = static_cast<double>(totals[id]) * scale;
      if (rw) {
        ++row.occr_r;
        sums.first += f;
      } else {
        ++row.occr_b;
        sums.second += f;
      }
    }
  }
  if (stats.n_r == 0 || stats.n_b == 0)
    throw ValidationError("corpus needs at least one ransomware and one benign trace");

  for (auto& [name, row] : stats.apis) {
    const auto& sums = freq_sums[name];
    if (row.occr_r > 0) row.freq_r_mean = sums.first / static_cast<double>(row.occr_r);
    if (row.occr_b > 0) row.freq_b_mean = sums.second / static_cast<double>(row.occr_b);
  }
  return stats;
}

struct ContrastTaus {
  double tau1 = 2.0;  // occurrence ratio at or above which an API joins R
  double tau2 = 3.0;  // benign-over-ransomware occurrence ratio for B
  double tau3 = 2.0;  // frequency ratio for O; also the O limit multiplier
};

enum class ApiSet { none, ransomware, benign, co_occurring };

inline std::string_view to_string(ApiSet s) {
  switch (s) {
    case ApiSet::ransomware: return "R";
    case ApiSet::benign: return "B";
    case ApiSet::co_occurring: return "O";
    case ApiSet::none: return "-";
  }
  return "-";
}

class ApiContrastModel {
 public:
  std::set<std::string, std::less<>> set_r;
  std::set<std::string, std::less<>> set_b;
  std::map<std::string, double, std::less<>> set_o;  // api -> calls per reference duration
  ContrastTaus taus;
  double reference_duration = kReferenceDuration;
  double min_support = 0.05;

  ApiSet membership(std::string_view api) const {
    if (set_r.find(api) != set_r.end()) return ApiSet::ransomware;
    if (set_b.find(api) != set_b.end()) return ApiSet::benign;
    if (set_o.find(api) != set_o.end()) return ApiSet::co_occurring;
    return ApiSet::none;
  }

  void validate() const {
    if (!(taus.tau1 > 0.0) || !(taus.tau2 > 0.0) || !(taus.tau3 > 0.0))
      throw ValidationError("contrast taus must be positive");
    if (!(reference_duration > 0.0)) throw ValidationError("reference duration must be positive");
    for (const auto& api : set_r)
      if (set_b.count(api) || set_o.count(api))
        throw ValidationError("api '" + api + "' is in more than one contrast set");
    for (const auto& api : set_b)
      if (set_o.count(api)) throw ValidationError("api '" + api + "' is in more than one contrast set");
    for (const auto& [api, limit] : set_o)
      if (!(limit > 0.0)) throw ValidationError("frequency limit for '" + api + "' must be positive");
  }

  void validate_against(const FileApiCatalogue& catalogue) const {
    validate();
    auto check = [&](const std::string& api) {
      if (catalogue.contains(api))
        throw ValidationError("file api '" + api + "' must not appear in a contrast set");
    };
    for (const auto& api : set_r) check(api);
    for (const auto& api : set_b) check(api);
    for (const auto& [api, limit] : set_o) check(api);
  }
};

struct TrainOptions {
  ContrastTaus taus;
  double min_support = 0.05;
  // Read the B rule literally as occr_R/occr_B <= tau2 (and O as the open
  // interval (tau2, tau1)) instead of benign prevalence occr_B/occr_R >= tau2.
  bool tau2_as_printed = false;
};

/// Sorts corpus APIs into R, B and O by class-normalized occurrence rates
/// r = occr_R / n_R and b = occr_B / n_B. File APIs are never assigned.
inline ApiContrastModel train_contrast(const CorpusStats& stats, const TrainOptions& options,
                                       const FileApiCatalogue& catalogue) {
  ApiContrastModel model;
  model.taus = options.taus;
  model.reference_duration = stats.reference_duration;
  model.min_support = options.min_support;
  model.validate();
  if (stats.n_r == 0 || stats.n_b == 0)
    throw ValidationError("corpus statistics need both classes");

  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto& t = options.taus;
  for (const auto& [api, row] : stats.apis) {
    if (catalogue.contains(api)) continue;
    const double r = static_cast<double>(row.occr_r) / static_cast<double>(stats.n_r);
    const double b = static_cast<double>(row.occr_b) / static_cast<double>(stats.n_b);
    if (r < options.min_support && b < options.min_support) continue;

    const double rw_over_b = b == 0.0 ? inf : r / b;
    if (rw_over_b >= t.tau1) {
      model.set_r.insert(api);
      continue;
    }
    const bool benign = options.tau2_as_printed ? rw_over_b <= t.tau2
                                                : (r == 0.0 ? inf : b / r) >= t.tau2;
    if (benign) {
      model.set_b.insert(api);
      continue;
    }
    const bool shared = options.tau2_as_printed ? (rw_over_b > t.tau2 && rw_over_b < t.tau1)
                                                : (rw_over_b > 1.0 / t.tau2 && rw_over_b < t.tau1);
    if (shared && row.freq_b_mean > 0.0 && row.freq_r_mean / row.freq_b_mean >= t.tau3) {
      model.set_o.emplace(api, t.tau3 * row.freq_b_mean);
    }
  }
  return model;
}

/// The reference model: R and B sets and the O frequency limits at 300 s.
inline ApiContrastModel builtin_model() {
  ApiContrastModel m;
  m.set_r = {"CoInitializeSecurity", "WriteConsoleW",   "Process32NextW", "CreateToolhelp32Snapshot",
             "Process32FirstW",      "CryptEncrypt",    "CryptExportKey", "CryptGenKey"};
  m.set_o = {{"NtAllocateVirtualMemory", 6412}, {"NtFreeVirtualMemory", 2320},
             {"OpenSCManagerW", 20},            {"OpenServiceW", 32},
             {"NtOpenThread", 16},              {"RegDeleteValueW", 56},
             {"GetUserNameExW", 28},            {"CoCreateInstanceEx", 8},
             {"CryptAcquireContextA", 64},      {"CryptCreateHash", 52}};
  m.set_b = {"NtDeleteKey",     "SendNotifyMessageW", "GetKeyState",
             "DrawTextExW",     "FindResourceW",      "GetCursorPos",
             "SizeofResource",  "FindResourceExW",    "FindWindowW",
             "NtCreateKey",     "GetForegroundWindow", "GetFileVersionInfoSizeW",
             "GetFileVersionInfoW", "EnumWindows",    "NtReadVirtualMemory",
             "OleInitialize",   "FindResourceA",      "RegCreateKeyExA"};
  m.taus = {2.0, 3.0, 2.0};
  m.reference_duration = kReferenceDuration;
  return m;
}

struct ApiContribution {
  std::string api;
  ApiSet set = ApiSet::none;
  int contribution = 0;
  std::uint64_t calls = 0;
  std::optional<double> limit;  // scaled O limit
};

struct ContrastBreakdown {
  int rw_score = 0;
  int benign_score = 0;
  std::vector<ApiContribution> contributions;  // sorted by api name

  int contrast_score() const noexcept { return rw_score + benign_score; }
};

/// Scores each distinct trace API once. O limits scale linearly with the
/// trace duration relative to the model's reference duration.
inline ContrastBreakdown contrast_breakdown(const Trace& trace, const ApiContrastModel& model) {
  ContrastBreakdown out;
  const auto totals = trace.api_totals();
  const double scale = trace.effective_duration() / model.reference_duration;
  for (SymbolId id = 0; id < totals.size(); ++id) {
    if (totals[id] == 0) continue;
    const auto& api = trace.apis.name(id);
    ApiContribution c{api, model.membership(api), 0, totals[id], std::nullopt};
    switch (c.set) {
      case ApiSet::ransomware: c.contribution = 1; break;
      case ApiSet::benign: c.contribution = -1; break;
      case ApiSet::co_occurring:
        c.limit = model.set_o.find(api)->second * scale;
        if (static_cast<double>(c.calls) > *c.limit) c.contribution = 1;
        break;
      case ApiSet::none: continue;
    }
    if (c.contribution > 0) out.rw_score += c.contribution;
    else out.benign_score += c.contribution;
    out.contributions.push_back(std::move(c));
  }
  std::sort(out.contributions.begin(), out.contributions.end(),
            [](const ApiContribution& a, const ApiContribution& b) { return a.api < b.api; });
  return out;
}

inline int rw_api_score(const Trace& trace, const ApiContrastModel& model) {
  return contrast_breakdown(trace, model).rw_score;
}

inline int benign_api_score(const Trace& trace, const ApiContrastModel& model) {
  return contrast_breakdown(trace, model).benign_score;
}

inline int api_contrast_score(const Trace& trace, const ApiContrastModel& model) {
  return contrast_breakdown(trace, model).contrast_score();
}

// --- serialization --------------------------------------------------------

inline nlohmann::json to_json(const ApiContrastModel& m) {
  nlohmann::json o = nlohmann::json::object();
  for (const auto& [api, limit] : m.set_o) o[api] = limit;
  return {{"tau", {m.taus.tau1, m.taus.tau2, m.taus.tau3}},
          {"reference_duration", m.reference_duration},
          {"min_support", m.min_support},
          {"R", m.set_r},
          {"B", m.set_b},
          {"O", o}};
}

inline ApiContrastModel model_from_json(const nlohmann::json& j) {
  ApiContrastModel m;
  try {
    const auto& tau = j.at("tau");
    if (!tau.is_array() || tau.size() != 3) throw ValidationError("'tau' must hold three numbers");
    m.taus = {tau[0].get<double>(), tau[1].get<double>(), tau[2].get<double>()};
    m.reference_duration = j.value("reference_duration", kReferenceDuration);
    m.min_support = j.value("min_support", 0.05);
    for (const auto& api : j.at("R")) m.set_r.insert(api.get<std::string>());
    for (const auto& api : j.at("B")) m.set_b.insert(api.get<std::string>());
    for (const auto& [api, limit] : j.at("O").items()) m.set_o.emplace(api, limit.get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed contrast model: ") + e.what());
  }
  m.validate();
  return m;
}

/// "builtin" selects the reference model; anything else is a JSON file path.
inline ApiContrastModel load_model(const std::string& source) {
  if (source == "builtin") return builtin_model();
  const auto text = read_file(source);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model file '" + source + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const ApiContrastModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json(model).dump(2) << '\n';
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace rwprof
