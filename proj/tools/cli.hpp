#pragma once

// rwprof command line: ingest, score, classify, train-contrast, gen, report.
//
// stdout carries line-delimited JSON only; human-readable tables go to stderr
// behind --pretty. Exit codes: 0 success, 1 usage or validation error, 2 I/O
// error.

#include <rwprof/rwprof.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rwprof::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitIo = 2;

// Window and metric flags shared by score and classify.
struct WindowFlags {
  std::string metric = "manhattan";
  double prev = 3.0;
  double curr = 1.0;
  std::size_t k = 10;
  std::size_t smooth = 5;
  std::string aggregate = "min";
  std::string catalogue;

  void add_to(CLI::App& sub) {
    sub.add_option("--prev", prev, "Previous window length in seconds")->capture_default_str();
    sub.add_option("--curr", curr, "Current window length in seconds")->capture_default_str();
    sub.add_option("--k", k, "Number of top file APIs in the window basis")->capture_default_str();
    sub.add_option("--smooth", smooth, "Rolling-mean width over scored windows")
        ->capture_default_str();
    sub.add_option("--aggregate", aggregate, "Per-trace aggregate: min or mean")
        ->capture_default_str();
    sub.add_option("--catalogue", catalogue,
                   "File-API catalogue, one name per line (default: built-in list)");
  }

  ConsistencyParams params() const {
    ConsistencyParams p;
    p.metric = parse_metric(metric);
    p.prev_len = prev;
    p.curr_len = curr;
    p.k = k;
    p.smooth_w = smooth;
    p.aggregate = parse_aggregate(aggregate);
    p.validate();
    return p;
  }

  FileApiCatalogue load_catalogue() const {
    return catalogue.empty() ? FileApiCatalogue::defaults() : FileApiCatalogue::load(catalogue);
  }
};

// Traces named on the command line, or a corpus directory / manifest.
struct TraceSource {
  std::vector<std::string> traces;
  std::string corpus;

  void add_to(CLI::App& sub) {
    sub.add_option("--trace", traces, "Native trace file (repeatable)");
    sub.add_option("--corpus", corpus, "Corpus directory or manifest file");
  }

  std::vector<ManifestEntry> entries() const {
    if (traces.empty() == corpus.empty())
      throw ValidationError("give either --trace or --corpus");
    if (!corpus.empty()) return read_manifest(corpus);
    std::vector<ManifestEntry> out;
    for (const auto& t : traces) out.push_back({t, Label::unknown, "", std::nullopt, ""});
    return out;
  }
};

inline std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

// --- config file ----------------------------------------------------------

// Applies a JSON object of option values to every option of `sub` that was
// not given on the command line. Keys are long option names without dashes;
// a nested object under the subcommand's name overrides top-level keys.
inline void apply_config(CLI::App& sub, const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");

  std::map<std::string, json> values;
  for (const auto& [key, value] : j.items())
    if (!value.is_object()) values[key] = value;
  if (auto it = j.find(sub.get_name()); it != j.end() && it->is_object())
    for (const auto& [key, value] : it->items()) values[key] = value;

  auto to_text = [](const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    return v.dump();
  };
  for (const auto& [key, value] : values) {
    if (key == "config") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ValidationError("config key '" + key + "' is not an option of " + sub.get_name());
    if (opt->count() > 0) continue;  // explicit flag wins
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(to_text(v));
    } else {
      opt->add_result(to_text(value));
    }
    opt->run_callback();
  }
}

// --- score ------------------------------------------------------------------

struct ScoreCommand {
  TraceSource source;
  WindowFlags window;
  std::vector<std::string> metrics;
  bool per_window = false;
  bool evenness = false;
  bool changepoints = false;
  double hazard = 200.0;
  double min_gap = 3.0;
  bool contrast = false;
  std::string model = "builtin";
  std::string baseline_api;
  std::string reference;
  std::string js_variant = "as_printed";
  std::size_t jobs = 1;

  void add_to(CLI::App& sub) {
    source.add_to(sub);
    window.add_to(sub);
    sub.add_option("--metric", metrics,
                   "cosine, manhattan, weighted, euclidean or all (repeatable; default all)");
    sub.add_flag("--per-window", per_window, "Include the raw per-window series");
    sub.add_flag("--evenness", evenness, "Add normalized and squared evenness");
    sub.add_flag("--changepoints", changepoints, "Add the changepoint count");
    sub.add_option("--hazard", hazard, "Changepoint hazard: expected run length")->capture_default_str();
    sub.add_option("--min-gap", min_gap, "Seconds between counted changepoints")->capture_default_str();
    sub.add_flag("--contrast", contrast, "Add the API contrast score");
    sub.add_option("--model", model, "Contrast model: builtin or a JSON file")->capture_default_str();
    sub.add_option("--baseline", baseline_api, "API for the distribution baselines");
    sub.add_option("--reference", reference, "Reference corpus for the baselines");
    sub.add_option("--js-variant", js_variant, "as_printed or standard")->capture_default_str();
    sub.add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  }

  struct Reference {
    FrequencyDistribution distribution;
    std::vector<double> counts;
    double mean_rate = 0.0;
  };

  std::optional<Reference> load_reference() const {
    if (baseline_api.empty()) return std::nullopt;
    if (reference.empty()) throw ValidationError("--baseline needs --reference");
    std::vector<BinSeries> series;
    for (const auto& e : read_manifest(reference)) series.push_back(bin_events(load_entry(e), 1.0));
    Reference ref;
    ref.distribution =
        api_frequency_distribution(series, baseline_api, Bucketing::geometric()).distribution;
    for (const auto& s : series)
      for (auto c : active_second_counts(s, baseline_api)) ref.counts.push_back(static_cast<double>(c));
    if (!ref.counts.empty())
      ref.mean_rate = std::accumulate(ref.counts.begin(), ref.counts.end(), 0.0) /
                      static_cast<double>(ref.counts.size());
    return ref;
  }

  json score_one(const Trace& trace, const std::vector<Metric>& chosen, const ConsistencyParams& base,
                 const FileApiCatalogue& catalogue, const ApiContrastModel* contrast_model,
                 const std::optional<Reference>& ref) const {
    const BinSeries series = bin_events(trace, 1.0);
    json row = {{"id", trace.id}, {"label", std::string(to_string(trace.label))}};

    json consistency = json::object();
    for (auto m : chosen) {
      auto p = base;
      p.metric = m;
      json entry;
      try {
        const auto s = trace_consistency(series, p, catalogue);
        entry = {{"aggregate", s.aggregate},
                 {"best_span", {s.best_span_start, s.best_span_end}},
                 {"basis", s.basis}};
        if (per_window) {
          json w = json::array();
          for (const auto& x : s.per_window) w.push_back({x.window_start, x.score});
          entry["per_window"] = std::move(w);
        }
      } catch (const UnscorableTrace& e) {
        entry = {{"unscorable", std::string(to_string(e.reason()))}};
      }
      consistency[std::string(to_string(m))] = std::move(entry);
    }
    row["consistency"] = std::move(consistency);

    if (evenness) {
      json ev = json::object();
      for (auto kind : {EvennessKind::normalized, EvennessKind::squared}) {
        try {
          ev[std::string(to_string(kind))] = trace_evenness(series, kind, catalogue, base.k).average;
        } catch (const UnscorableTrace&) {
          ev[std::string(to_string(kind))] = nullptr;
        }
      }
      row["evenness"] = std::move(ev);
    }

    if (changepoints) {
      BocdParams bp;
      bp.hazard_lambda = hazard;
      bp.min_gap = min_gap;
      try {
        const auto cp = detect_changepoints(series, bp, catalogue, base.k);
        row["changepoints"] = {{"count", cp.locations.size()}, {"locations", cp.locations}};
      } catch (const Error& e) {
        row["changepoints"] = {{"count", nullptr}, {"error", e.what()}};
      }
    }

    if (contrast_model != nullptr) {
      const auto b = contrast_breakdown(trace, *contrast_model);
      row["contrast"] = {{"rw_score", b.rw_score},
                         {"benign_score", b.benign_score},
                         {"score", b.contrast_score()}};
    }

    if (ref) {
      const auto variant = js_variant == "standard" ? JsVariant::standard : JsVariant::as_printed;
      const auto d = api_frequency_distribution(std::span<const BinSeries>(&series, 1), baseline_api,
                                                Bucketing::geometric());
      json b = {{"api", baseline_api},
                {"kl", kl_divergence(d.distribution, ref->distribution)},
                {"js", js_divergence(d.distribution, ref->distribution, variant)},
                {"warnings", d.warnings}};
      std::vector<double> counts;
      std::vector<std::int64_t> int_counts;
      for (auto c : active_second_counts(series, baseline_api)) {
        counts.push_back(static_cast<double>(c));
        int_counts.push_back(static_cast<std::int64_t>(c));
      }
      if (!counts.empty() && !ref->counts.empty()) {
        const auto rs = wilcoxon_rank_sum(counts, ref->counts);
        b["rank_sum"] = {{"u", rs.u}, {"z", rs.z}, {"p", rs.p_value}};
        b["poisson"] = poisson_rate_score(int_counts, ref->mean_rate);
      } else {
        b["rank_sum"] = nullptr;
        b["poisson"] = nullptr;
      }
      row["baseline"] = std::move(b);
    }
    return row;
  }

  int run(std::ostream& out) const {
    std::vector<Metric> chosen;
    if (metrics.empty() || std::find(metrics.begin(), metrics.end(), "all") != metrics.end()) {
      chosen.assign(std::begin(kAllMetrics), std::end(kAllMetrics));
    } else {
      for (const auto& m : metrics) chosen.push_back(parse_metric(m));
    }
    if (js_variant != "as_printed" && js_variant != "standard")
      throw ValidationError("--js-variant must be as_printed or standard");
    const auto base = window.params();
    const auto catalogue = window.load_catalogue();
    std::optional<ApiContrastModel> m;
    if (contrast) m = load_model(model);
    const auto ref = load_reference();
    const auto entries = source.entries();

    std::vector<std::pair<std::string, json>> rows(entries.size());
    parallel_for(entries.size(), jobs, [&](std::size_t i) {
      const auto trace = load_entry(entries[i]);
      rows[i] = {trace.id, score_one(trace, chosen, base, catalogue, m ? &*m : nullptr, ref)};
    });
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [id, row] : rows) out << dump(row) << '\n';
    return kExitOk;
  }
};

// --- classify ---------------------------------------------------------------

struct ClassifyCommand {
  TraceSource source;
  WindowFlags window;
  std::string model = "builtin";
  std::optional<double> threshold;
  int refine = kDefaultStage2Threshold;
  bool no_refine = false;
  bool calibrate = false;
  std::size_t jobs = 1;
  bool pretty = false;

  void add_to(CLI::App& sub) {
    source.add_to(sub);
    window.add_to(sub);
    sub.add_option("--metric", window.metric, "Stage-1 metric")->capture_default_str();
    sub.add_option("--model", model, "Contrast model: builtin or a JSON file")->capture_default_str();
    sub.add_option("--threshold", threshold,
                   "Stage-1 threshold (default: calibrated value for the metric)");
    sub.add_option("--refine", refine, "Stage-2 threshold: contrast <= value overturns a positive")
        ->capture_default_str();
    sub.add_flag("--no-refine", no_refine, "Report stage-1 decisions only");
    sub.add_flag("--calibrate", calibrate,
                 "Calibrate the stage-1 threshold on the labeled corpus before classifying");
    sub.add_option("--jobs", jobs, "Worker threads")->capture_default_str();
    sub.add_flag("--pretty", pretty, "Print a summary table to stderr");
  }

  int run(std::ostream& out, std::ostream& err) const {
    PipelineConfig config;
    config.consistency = window.params();
    config.catalogue = window.load_catalogue();
    config.model = load_model(model);
    config.stage1_threshold = threshold.value_or(default_stage1_threshold(config.consistency.metric));
    config.stage2_threshold = no_refine ? std::nullopt : std::optional<int>(refine);
    const auto entries = source.entries();

    if (calibrate) {
      std::vector<LabeledScore> scores(entries.size());
      parallel_for(entries.size(), jobs, [&](std::size_t i) {
        const auto t = load_entry(entries[i]);
        scores[i] = {t.id, t.label, std::numeric_limits<double>::quiet_NaN()};
        try {
          scores[i].score = trace_consistency(t, config.consistency, config.catalogue).aggregate;
        } catch (const UnscorableTrace&) {
        }
      });
      std::vector<std::string> skipped;
      std::erase_if(scores, [&](const LabeledScore& s) {
        const bool drop = s.label == Label::unknown || std::isnan(s.score);
        if (drop) skipped.push_back("trace '" + s.id + "' left out of calibration");
        return drop;
      });
      auto c = calibrate_threshold(std::move(scores));
      c.warnings.insert(c.warnings.begin(), skipped.begin(), skipped.end());
      config.stage1_threshold = c.threshold;
      for (const auto& w : c.warnings) err << "warning: " << w << '\n';
      out << dump({{"calibration",
                    {{"metric", std::string(to_string(config.consistency.metric))},
                     {"threshold", c.threshold},
                     {"separable", c.separable},
                     {"warnings", c.warnings}}}})
          << '\n';
    }

    const auto verdicts = batch_classify(
        entries.size(), [&](std::size_t i) { return load_entry(entries[i]); }, config, jobs);
    for (const auto& v : verdicts) out << dump(verdict_to_json(v)) << '\n';

    const auto summary = summarize(verdicts);
    if (summary.unlabeled < verdicts.size()) out << dump({{"summary", summary_to_json(summary)}}) << '\n';
    if (pretty) err << summary_table(summary);
    return kExitOk;
  }
};

// --- train-contrast ---------------------------------------------------------

struct TrainCommand {
  std::string corpus;
  std::string out_path;
  double tau1 = 2.0, tau2 = 3.0, tau3 = 2.0;
  double min_support = 0.05;
  double reference_duration = kReferenceDuration;
  bool tau2_as_printed = false;
  std::string catalogue;

  void add_to(CLI::App& sub) {
    sub.add_option("--corpus", corpus, "Labeled corpus directory or manifest");
    sub.add_option("--out", out_path, "Model file to write");
    sub.add_option("--tau1", tau1, "Occurrence ratio for R")->capture_default_str();
    sub.add_option("--tau2", tau2, "Occurrence ratio for B")->capture_default_str();
    sub.add_option("--tau3", tau3, "Frequency ratio for O")->capture_default_str();
    sub.add_option("--min-support", min_support, "Minimum occurrence rate in either class")
        ->capture_default_str();
    sub.add_option("--reference-duration", reference_duration, "Seconds per frequency unit")
        ->capture_default_str();
    sub.add_flag("--tau2-as-printed", tau2_as_printed, "Use the literal occr_R/occr_B <= tau2 rule for B");
    sub.add_option("--catalogue", catalogue, "File-API catalogue (default: built-in list)");
  }

  int run(std::ostream& out) const {
    if (corpus.empty() || out_path.empty()) throw ValidationError("train-contrast needs --corpus and --out");
    const auto cat = catalogue.empty() ? FileApiCatalogue::defaults() : FileApiCatalogue::load(catalogue);
    const auto traces = load_corpus(corpus);
    const auto stats = collect_corpus_stats(traces, reference_duration);
    TrainOptions options;
    options.taus = {tau1, tau2, tau3};
    options.min_support = min_support;
    options.tau2_as_printed = tau2_as_printed;
    const auto model = train_contrast(stats, options, cat);
    save_model(model, out_path);
    out << dump({{"model", out_path},
                 {"n_ransomware", stats.n_r},
                 {"n_benign", stats.n_b},
                 {"R", model.set_r.size()},
                 {"B", model.set_b.size()},
                 {"O", model.set_o.size()}})
        << '\n';
    return kExitOk;
  }
};

// --- gen ----------------------------------------------------------------------

struct GenCommand {
  std::string manifest;
  bool standard = false;
  std::string out_dir;
  std::size_t n_rw = 50, n_benign = 50, n_git = 5;
  std::uint64_t first_seed = 1;
  std::optional<double> duration;
  std::optional<double> rate;

  void add_to(CLI::App& sub) {
    sub.add_option("--manifest", manifest, "Generator manifest: JSON array of trace specs");
    sub.add_flag("--standard", standard, "Generate the standard evaluation corpus");
    sub.add_option("--out", out_dir, "Output directory");
    sub.add_option("--n-rw", n_rw, "Standard corpus: ransomware traces")->capture_default_str();
    sub.add_option("--n-benign", n_benign, "Standard corpus: benign traces")->capture_default_str();
    sub.add_option("--n-git", n_git, "Standard corpus: git_like traces among the benign ones")
        ->capture_default_str();
    sub.add_option("--first-seed", first_seed, "Standard corpus: first seed")->capture_default_str();
    sub.add_option("--duration", duration, "Override every spec's duration (seconds)");
    sub.add_option("--rate", rate, "Override every spec's mean file-API rate (calls/s)");
  }

  int run(std::ostream& out) const {
    if (out_dir.empty()) throw ValidationError("gen needs --out");
    if (manifest.empty() == !standard) throw ValidationError("give either --manifest or --standard");
    auto specs = standard ? standard_corpus_specs(n_rw, n_benign, n_git, first_seed)
                          : read_gen_specs(manifest);
    for (auto& s : specs) {
      if (duration) s.duration = *duration;
      if (rate) s.rate = *rate;
    }
    const auto written = write_corpus(specs, out_dir);
    out << dump({{"out", out_dir},
                 {"manifest", (fs::path(out_dir) / "manifest.json").string()},
                 {"traces", written.size()}})
        << '\n';
    return kExitOk;
  }
};

// --- ingest -------------------------------------------------------------------

struct IngestCommand {
  std::string report;
  std::string out_path;
  std::string id;
  std::string label;
  std::optional<double> duration;

  void add_to(CLI::App& sub) {
    sub.add_option("--report", report, "Sandbox JSON report");
    sub.add_option("--out", out_path, "Native trace file to write (default: stdout)");
    sub.add_option("--id", id, "Trace id (default: report id or file stem)");
    sub.add_option("--label", label, "ransomware, benign or unknown");
    sub.add_option("--duration", duration, "Declared duration; later calls are dropped");
  }

  int run(std::ostream& out, std::ostream& err) const {
    if (report.empty()) throw ValidationError("ingest needs --report");
    auto result = load_sandbox_report(report);
    auto& trace = result.trace;
    if (!id.empty()) trace.id = id;
    if (trace.id.empty()) trace.id = fs::path(report).stem().string();
    if (!label.empty()) trace.label = parse_label(label);
    if (duration) trace.declared_duration = *duration;
    auto normalized = normalize(std::move(trace));
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    if (out_path.empty()) {
      serialize_native(normalized.trace, out);
    } else {
      save_trace_native(normalized.trace, out_path);
      out << dump({{"id", normalized.trace.id},
                   {"out", out_path},
                   {"events", normalized.trace.events.size()},
                   {"dropped", normalized.dropped},
                   {"warnings", result.warnings}})
          << '\n';
    }
    return kExitOk;
  }
};

// --- report -------------------------------------------------------------------

struct ReportCommand {
  std::string verdicts;
  std::string labels;
  bool pretty = false;

  void add_to(CLI::App& sub) {
    sub.add_option("--verdicts", verdicts, "Verdict lines written by classify");
    sub.add_option("--labels", labels, "Corpus manifest whose labels override the verdicts'");
    sub.add_flag("--pretty", pretty, "Print the table to stderr as well");
  }

  int run(std::ostream& out, std::ostream& err) const {
    if (verdicts.empty()) throw ValidationError("report needs --verdicts");
    std::map<std::string, Label> truth;
    if (!labels.empty())
      for (const auto& e : read_manifest(labels)) {
        const auto key = e.id.empty() ? e.path.stem().string() : e.id;
        truth[key] = e.label;
      }

    std::vector<Verdict> rows;
    std::istringstream in(read_file(verdicts));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
      if (j.contains("summary") || j.contains("calibration")) continue;
      auto v = verdict_from_json(j);
      if (auto it = truth.find(v.id); it != truth.end()) v.label = it->second;
      rows.push_back(std::move(v));
    }
    sort_verdicts(rows);
    const auto summary = summarize(rows);
    out << dump({{"summary", summary_to_json(summary)}}) << '\n';
    if (pretty) err << summary_table(summary);
    return kExitOk;
  }
};

// --- entry point ----------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ransomware behavioral profiling: consistency scoring and two-stage classification",
               "rwprof"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file of option values; explicit flags win");
  };

  IngestCommand ingest;
  ScoreCommand score;
  ClassifyCommand classify_cmd;
  TrainCommand train;
  GenCommand gen;
  ReportCommand report;

  auto* ingest_sub = app.add_subcommand("ingest", "Convert a sandbox report to a native trace");
  ingest.add_to(*ingest_sub);
  auto* score_sub = app.add_subcommand("score", "Emit metric scores per trace");
  score.add_to(*score_sub);
  auto* classify_sub = app.add_subcommand("classify", "Two-stage verdicts for traces or a corpus");
  classify_cmd.add_to(*classify_sub);
  auto* train_sub = app.add_subcommand("train-contrast", "Train an API contrast model");
  train.add_to(*train_sub);
  auto* gen_sub = app.add_subcommand("gen", "Write a synthetic corpus");
  gen.add_to(*gen_sub);
  auto* report_sub = app.add_subcommand("report", "Precision and recall from verdict lines");
  report.add_to(*report_sub);
  for (auto* sub : {ingest_sub, score_sub, classify_sub, train_sub, gen_sub, report_sub}) add_config(sub);

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("rwprof");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalid;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(*active, config_path);
    if (active == ingest_sub) return ingest.run(out, err);
    if (active == score_sub) return score.run(out);
    if (active == classify_sub) return classify_cmd.run(out, err);
    if (active == train_sub) return train.run(out);
    if (active == gen_sub) return gen.run(out);
    return report.run(out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace rwprof::cli
