#pragma once

// Adapter for sandbox-style JSON execution reports:
//
//   {"info": {"id": 17, "duration": 300},
//    "behavior": {"processes": [{"calls": [{"time": 1690000000.25, "api": "NtCreateFile",
//                                           "category": "file"}, ...]}, ...]}}
//
// Calls from all processes are merged into one trace and rebased so the
// earliest call sits at ts = 0. Absolute epoch and relative times both work.

#include <rwprof/error.hpp>
#include <rwprof/native_format.hpp>
#include <rwprof/trace.hpp>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rwprof {

struct IngestResult {
  Trace trace;
  std::vector<std::string> warnings;
};

namespace detail {

inline const nlohmann::json* find_member(const nlohmann::json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline const nlohmann::json* call_time(const nlohmann::json& call) {
  for (const char* key : {"time", "timestamp", "ts"}) {
    if (const auto* v = find_member(call, key); v && v->is_number()) return v;
  }
  return nullptr;
}

}  // namespace detail

inline IngestResult parse_sandbox_report(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("sandbox report is not valid JSON: ") + e.what());
  }

  IngestResult result;
  auto& trace = result.trace;

  if (const auto* info = detail::find_member(doc, "info")) {
    if (const auto* id = detail::find_member(*info, "id")) {
      if (id->is_string()) trace.id = id->get<std::string>();
      else if (id->is_number()) trace.id = id->dump();
    }
    if (const auto* d = detail::find_member(*info, "duration"); d && d->is_number()) {
      if (d->get<double>() > 0.0) trace.declared_duration = d->get<double>();
    }
  }

  struct RawCall {
    double time;
    const std::string* api;
    const std::string* category;
  };
  std::vector<RawCall> calls;
  std::size_t skipped = 0;

  const nlohmann::json* processes = nullptr;
  if (const auto* behavior = detail::find_member(doc, "behavior"))
    processes = detail::find_member(*behavior, "processes");

  if (processes == nullptr || !processes->is_array()) {
    result.warnings.emplace_back("report has no behavior.processes array");
  } else {
    for (const auto& proc : *processes) {
      const auto* list = detail::find_member(proc, "calls");
      if (list == nullptr || !list->is_array()) continue;
      for (const auto& call : *list) {
        const auto* t = detail::call_time(call);
        const auto* api = detail::find_member(call, "api");
        if (t == nullptr || api == nullptr || !api->is_string() ||
            api->get_ref<const std::string&>().empty()) {
          ++skipped;
          continue;
        }
        const auto* cat = detail::find_member(call, "category");
        calls.push_back({t->get<double>(), &api->get_ref<const std::string&>(),
                         cat && cat->is_string() ? &cat->get_ref<const std::string&>() : nullptr});
      }
    }
  }

  if (skipped > 0)
    result.warnings.push_back("skipped " + std::to_string(skipped) +
                              " call records without a numeric time and api name");
  if (calls.empty()) {
    result.warnings.emplace_back("no call records found; trace is empty");
    return result;
  }

  // Process order then call order break timestamp ties.
  std::stable_sort(calls.begin(), calls.end(),
                   [](const RawCall& a, const RawCall& b) { return a.time < b.time; });
  const double origin = calls.front().time;
  trace.events.reserve(calls.size());
  for (const auto& c : calls) {
    trace.add_event(c.time - origin, *c.api, c.category ? std::string_view(*c.category) : "");
  }
  return result;
}

inline IngestResult load_sandbox_report(const std::filesystem::path& path) {
  return parse_sandbox_report(read_file(path));
}

}  // namespace rwprof
