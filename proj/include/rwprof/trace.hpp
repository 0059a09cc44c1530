#pragma once

#include <rwprof/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rwprof {

using SymbolId = std::uint32_t;
inline constexpr SymbolId kNoSymbol = std::numeric_limits<SymbolId>::max();

namespace detail {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

}  // namespace detail

/// Interns strings to dense ids. Ids are assigned in first-seen order.
class SymbolTable {
 public:
  SymbolId intern(std::string_view name) {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    const auto id = static_cast<SymbolId>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::optional<SymbolId> find(std::string_view name) const {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    return std::nullopt;
  }

  const std::string& name(SymbolId id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, SymbolId, detail::StringHash, std::equal_to<>> index_;
};

enum class Label { ransomware, benign, unknown };

inline std::string_view to_string(Label label) {
  switch (label) {
    case Label::ransomware: return "ransomware";
    case Label::benign: return "benign";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

inline Label parse_label(std::string_view text) {
  if (text == "ransomware") return Label::ransomware;
  if (text == "benign") return Label::benign;
  if (text == "unknown" || text.empty()) return Label::unknown;
  throw ValidationError("unknown label '" + std::string(text) + "'");
}

/// One API invocation. `api` and `category` index the owning trace's tables.
struct ApiEvent {
  double ts = 0.0;
  SymbolId api = kNoSymbol;
  SymbolId category = kNoSymbol;
};

/// All API calls recorded for one execution, timestamps relative to the first call.
struct Trace {
  std::string id;
  Label label = Label::unknown;
  std::optional<double> declared_duration;
  std::vector<ApiEvent> events;
  SymbolTable apis;
  SymbolTable categories;

  void add_event(double ts, std::string_view api, std::string_view category = {}) {
    if (!(ts >= 0.0) || !std::isfinite(ts))
      throw ValidationError("event timestamp must be a finite non-negative number");
    if (api.empty()) throw ValidationError("event api name must be non-empty");
    events.push_back({ts, apis.intern(api),
                      category.empty() ? kNoSymbol : categories.intern(category)});
  }

  const std::string& api_name(const ApiEvent& e) const { return apis.name(e.api); }

  std::string_view category_name(const ApiEvent& e) const {
    return e.category == kNoSymbol ? std::string_view{} : categories.name(e.category);
  }

  bool empty() const noexcept { return events.empty(); }

  double max_ts() const noexcept {
    double m = 0.0;
    for (const auto& e : events) m = std::max(m, e.ts);
    return m;
  }

  /// Declared duration when known, otherwise the number of whole seconds the
  /// events touch (an event at ts falls in second floor(ts)).
  double effective_duration() const noexcept {
    if (declared_duration) return *declared_duration;
    if (events.empty()) return 0.0;
    return std::floor(max_ts()) + 1.0;
  }

  bool is_sorted() const noexcept {
    return std::is_sorted(events.begin(), events.end(),
                          [](const ApiEvent& a, const ApiEvent& b) { return a.ts < b.ts; });
  }

  /// Per-API total call counts, indexed by api id.
  std::vector<std::uint64_t> api_totals() const {
    std::vector<std::uint64_t> totals(apis.size(), 0);
    for (const auto& e : events) ++totals[e.api];
    return totals;
  }
};

/// Content equality: compares names rather than interned ids.
inline bool operator==(const Trace& a, const Trace& b) {
  if (a.id != b.id || a.label != b.label || a.declared_duration != b.declared_duration ||
      a.events.size() != b.events.size())
    return false;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    const auto& ea = a.events[i];
    const auto& eb = b.events[i];
    if (ea.ts != eb.ts || a.api_name(ea) != b.api_name(eb) ||
        a.category_name(ea) != b.category_name(eb))
      return false;
  }
  return true;
}

struct NormalizeResult {
  Trace trace;
  std::size_t dropped = 0;
};

/// Stable-sorts events by timestamp and drops events past the declared duration.
inline NormalizeResult normalize(Trace trace) {
  auto& ev = trace.events;
  if (!trace.is_sorted()) {
    std::stable_sort(ev.begin(), ev.end(),
                     [](const ApiEvent& a, const ApiEvent& b) { return a.ts < b.ts; });
  }
  std::size_t dropped = 0;
  if (trace.declared_duration) {
    const double limit = *trace.declared_duration;
    auto first_over = std::upper_bound(ev.begin(), ev.end(), limit,
                                       [](double t, const ApiEvent& e) { return t < e.ts; });
    dropped = static_cast<std::size_t>(ev.end() - first_over);
    ev.erase(first_over, ev.end());
  }
  return {std::move(trace), dropped};
}

}  // namespace rwprof
