#pragma once

// Corpus manifest: a JSON array of {"path", "label", "kind", "seed", "id"}.
// Relative paths resolve against the manifest's directory.

#include <rwprof/error.hpp>
#include <rwprof/native_format.hpp>
#include <rwprof/trace.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace rwprof {

struct ManifestEntry {
  std::filesystem::path path;
  Label label = Label::unknown;
  std::string kind;
  std::optional<std::uint64_t> seed;
  std::string id;
};

inline std::filesystem::path manifest_path_for(const std::filesystem::path& corpus) {
  return std::filesystem::is_directory(corpus) ? corpus / "manifest.json" : corpus;
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& corpus) {
  const auto path = manifest_path_for(corpus);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_array()) throw ValidationError("manifest must be a JSON array");

  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  for (const auto& row : j) {
    ManifestEntry e;
    try {
      std::filesystem::path p = row.at("path").get<std::string>();
      e.path = p.is_absolute() ? p : base / p;
      e.label = parse_label(row.value("label", std::string("unknown")));
      e.kind = row.value("kind", std::string());
      if (row.contains("seed") && row["seed"].is_number_unsigned()) e.seed = row["seed"].get<std::uint64_t>();
      e.id = row.value("id", std::string());
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(std::string("malformed manifest entry: ") + ex.what());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<ManifestEntry>& entries) {
  nlohmann::json j = nlohmann::json::array();
  const auto base = path.parent_path();
  for (const auto& e : entries) {
    nlohmann::json row = {{"path", e.path.lexically_relative(base).generic_string()},
                          {"label", std::string(to_string(e.label))},
                          {"kind", e.kind}};
    if (e.seed) row["seed"] = *e.seed;
    if (!e.id.empty()) row["id"] = e.id;
    j.push_back(std::move(row));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

/// Loads and normalizes one manifest entry. Manifest label and id take
/// precedence over the trace header; the file stem is the id of last resort.
inline Trace load_entry(const ManifestEntry& entry) {
  auto trace = normalize(load_trace_native(entry.path)).trace;
  if (entry.label != Label::unknown) trace.label = entry.label;
  if (!entry.id.empty()) trace.id = entry.id;
  if (trace.id.empty()) trace.id = entry.path.stem().string();
  return trace;
}

inline std::vector<Trace> load_corpus(const std::filesystem::path& corpus) {
  std::vector<Trace> traces;
  for (const auto& e : read_manifest(corpus)) traces.push_back(load_entry(e));
  return traces;
}

}  // namespace rwprof
