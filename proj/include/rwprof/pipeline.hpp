#pragma once

// Two-stage classification: a consistency score below the stage-1 threshold
// flags a trace, and a contrast score at or below the stage-2 threshold
// overturns the flag.

#include <rwprof/consistency.hpp>
#include <rwprof/contrast.hpp>
#include <rwprof/error.hpp>
#include <rwprof/trace.hpp>
#include <rwprof/windowing.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace rwprof {

/// Stage-1 thresholds calibrated on the standard synthetic corpus (50
/// ransomware traces, seeds 1-50; 45 mixed benign and 5 git_like traces,
/// seeds 51-100; 120 s at 2000 calls/s) with the default window parameters.
inline double default_stage1_threshold(Metric metric) {
  switch (metric) {
    case Metric::cosine: return 0.0013;
    case Metric::manhattan: return 150.0;
    case Metric::weighted: return 17.0;
    case Metric::euclidean: return 84.0;
  }
  return 0.0;
}

inline constexpr int kDefaultStage2Threshold = -10;

struct PipelineConfig {
  ConsistencyParams consistency;
  double stage1_threshold = default_stage1_threshold(Metric::manhattan);
  std::optional<int> stage2_threshold = kDefaultStage2Threshold;  // nullopt disables refinement
  ApiContrastModel model = builtin_model();
  FileApiCatalogue catalogue = FileApiCatalogue::defaults();

  void validate() const {
    consistency.validate();
    if (!std::isfinite(stage1_threshold)) throw ValidationError("stage-1 threshold must be finite");
    model.validate();
  }
};

struct WindowSpan {
  double start = 0.0;
  double end = 0.0;
  double score = 0.0;  // smoothed score over the span
};

struct Verdict {
  std::string id;
  Label label = Label::unknown;  // ground truth, when known
  std::optional<double> stage1_score;
  bool stage1_positive = false;
  std::optional<int> contrast_score;  // present iff stage-1 positive
  Label final = Label::benign;
  std::optional<UnscorableTrace::Reason> unscorable;
  // Explanation: the most consistent span and, after refinement, every API
  // that moved the contrast score.
  std::optional<WindowSpan> span;
  std::vector<ApiContribution> contributions;
};

inline Verdict classify(const Trace& trace, const BinSeries& series, const PipelineConfig& config) {
  Verdict v;
  v.id = trace.id;
  v.label = trace.label;
  try {
    const auto score = trace_consistency(series, config.consistency, config.catalogue);
    v.stage1_score = score.aggregate;
    v.span = WindowSpan{score.best_span_start, score.best_span_end, score.best_score};
  } catch (const UnscorableTrace& e) {
    v.unscorable = e.reason();
    return v;
  }
  v.stage1_positive = *v.stage1_score < config.stage1_threshold;
  if (!v.stage1_positive) return v;

  auto breakdown = contrast_breakdown(trace, config.model);
  v.contrast_score = breakdown.contrast_score();
  v.contributions = std::move(breakdown.contributions);
  const bool overturned = config.stage2_threshold && *v.contrast_score <= *config.stage2_threshold;
  v.final = overturned ? Label::benign : Label::ransomware;
  return v;
}

inline Verdict classify(const Trace& trace, const PipelineConfig& config) {
  return classify(trace, bin_events(trace, 1.0), config);
}

// --- calibration ------------------------------------------------------------

struct LabeledScore {
  std::string id;
  Label label = Label::unknown;
  double score = 0.0;
};

struct Calibration {
  double threshold = 0.0;
  bool separable = false;
  std::vector<LabeledScore> scores;  // sorted by id
  std::vector<std::string> warnings;
};

/// Picks a stage-1 threshold from labeled scores. Separable classes get the
/// midpoint between the highest ransomware score and the lowest benign score.
/// Otherwise recall comes first: the threshold sits just above the highest
/// ransomware score, halfway to the next higher score (or one unit above
/// when none exists), which maximizes F1 among recall-1 thresholds.
inline Calibration calibrate_threshold(std::vector<LabeledScore> scores) {
  Calibration c;
  double max_rw = -std::numeric_limits<double>::infinity();
  double min_b = std::numeric_limits<double>::infinity();
  std::size_t n_rw = 0, n_b = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw ValidationError("calibration scores must be finite");
    if (s.label == Label::ransomware) {
      ++n_rw;
      max_rw = std::max(max_rw, s.score);
    } else if (s.label == Label::benign) {
      ++n_b;
      min_b = std::min(min_b, s.score);
    }
  }
  if (n_rw == 0 || n_b == 0)
    throw ValidationError("calibration needs scored ransomware and benign traces");

  if (max_rw < min_b) {
    c.separable = true;
    c.threshold = 0.5 * (max_rw + min_b);
  } else {
    double next = std::numeric_limits<double>::infinity();
    for (const auto& s : scores)
      if (s.label != Label::unknown && s.score > max_rw) next = std::min(next, s.score);
    c.threshold = std::isfinite(next) ? 0.5 * (max_rw + next) : max_rw + 1.0;
    std::size_t fp = 0;
    for (const auto& s : scores)
      if (s.label == Label::benign && s.score < c.threshold) ++fp;
    c.warnings.push_back("classes overlap: threshold keeps every ransomware trace and admits " +
                         std::to_string(fp) + " benign trace(s)");
  }
  std::sort(scores.begin(), scores.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.id < b.id; });
  c.scores = std::move(scores);
  return c;
}

/// Scores a labeled corpus and calibrates. Unscorable or unlabeled traces are
/// left out with a warning.
inline Calibration calibrate_stage1(std::span<const Trace> corpus, const ConsistencyParams& params,
                                    const FileApiCatalogue& catalogue) {
  std::vector<LabeledScore> scores;
  std::vector<std::string> skipped;
  for (const auto& t : corpus) {
    if (t.label == Label::unknown) {
      skipped.push_back("trace '" + t.id + "' has no label and was left out");
      continue;
    }
    try {
      scores.push_back({t.id, t.label, trace_consistency(t, params, catalogue).aggregate});
    } catch (const UnscorableTrace& e) {
      skipped.push_back("trace '" + t.id + "' is unscorable (" + e.what() + ") and was left out");
    }
  }
  auto c = calibrate_threshold(std::move(scores));
  c.warnings.insert(c.warnings.begin(), skipped.begin(), skipped.end());
  return c;
}

// --- batch ------------------------------------------------------------------

struct Summary {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t unlabeled = 0;   // reported, not counted
  std::size_t unscorable = 0;  // counted as benign verdicts
  std::size_t stage1_positive = 0;
  std::size_t overturned = 0;

  std::optional<double> precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  std::optional<double> recall() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
};

inline Summary summarize(std::span<const Verdict> verdicts) {
  Summary s;
  for (const auto& v : verdicts) {
    if (v.unscorable) ++s.unscorable;
    if (v.stage1_positive) ++s.stage1_positive;
    if (v.stage1_positive && v.final == Label::benign) ++s.overturned;
    const bool predicted = v.final == Label::ransomware;
    switch (v.label) {
      case Label::ransomware: ++(predicted ? s.tp : s.fn); break;
      case Label::benign: ++(predicted ? s.fp : s.tn); break;
      case Label::unknown: ++s.unlabeled; break;
    }
  }
  return s;
}

inline void sort_verdicts(std::vector<Verdict>& verdicts) {
  std::stable_sort(verdicts.begin(), verdicts.end(),
                   [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any task is rethrown after all workers stop.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

/// Classifies n traces produced by load(i), keeping at most `jobs` traces in
/// memory at once. Output is ordered by trace id.
inline std::vector<Verdict> batch_classify(std::size_t n, const std::function<Trace(std::size_t)>& load,
                                           const PipelineConfig& config, std::size_t jobs = 1) {
  config.validate();
  std::vector<Verdict> out(n);
  parallel_for(n, jobs, [&](std::size_t i) { out[i] = classify(load(i), config); });
  sort_verdicts(out);
  return out;
}

inline std::vector<Verdict> batch_classify(std::span<const Trace> corpus, const PipelineConfig& config,
                                           std::size_t jobs = 1) {
  config.validate();
  std::vector<Verdict> out(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) { out[i] = classify(corpus[i], config); });
  sort_verdicts(out);
  return out;
}

// --- output -----------------------------------------------------------------

inline std::string_view to_string(UnscorableTrace::Reason r) {
  return r == UnscorableTrace::Reason::insufficient_duration ? "insufficient_duration"
                                                              : "no_file_activity";
}

namespace detail {

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json contribution_to_json(const ApiContribution& c) {
  nlohmann::json j = {{"kind", "api"},
                      {"api", c.api},
                      {"set", std::string(to_string(c.set))},
                      {"contribution", c.contribution},
                      {"calls", c.calls}};
  if (c.limit) j["limit"] = *c.limit;
  return j;
}

inline nlohmann::json verdict_to_json(const Verdict& v) {
  nlohmann::json explanation = nlohmann::json::array();
  if (v.span)
    explanation.push_back(
        {{"kind", "window"}, {"start", v.span->start}, {"end", v.span->end}, {"score", v.span->score}});
  for (const auto& c : v.contributions) explanation.push_back(contribution_to_json(c));

  nlohmann::json j = {{"id", v.id},
                      {"label", std::string(to_string(v.label))},
                      {"stage1_score", detail::optional_json(v.stage1_score)},
                      {"stage1_positive", v.stage1_positive},
                      {"contrast_score", detail::optional_json(v.contrast_score)},
                      {"final", std::string(to_string(v.final))}};
  j["unscorable"] = v.unscorable ? nlohmann::json(std::string(to_string(*v.unscorable)))
                                 : nlohmann::json(nullptr);
  j["explanation"] = std::move(explanation);
  return j;
}

inline Verdict verdict_from_json(const nlohmann::json& j) {
  Verdict v;
  try {
    v.id = j.at("id").get<std::string>();
    v.label = parse_label(j.value("label", std::string("unknown")));
    if (j.contains("stage1_score") && !j["stage1_score"].is_null())
      v.stage1_score = j["stage1_score"].get<double>();
    v.stage1_positive = j.value("stage1_positive", false);
    if (j.contains("contrast_score") && !j["contrast_score"].is_null())
      v.contrast_score = j["contrast_score"].get<int>();
    v.final = parse_label(j.at("final").get<std::string>());
    if (j.contains("unscorable") && j["unscorable"].is_string())
      v.unscorable = j["unscorable"].get<std::string>() == "insufficient_duration"
                         ? UnscorableTrace::Reason::insufficient_duration
                         : UnscorableTrace::Reason::no_file_activity;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed verdict: ") + e.what());
  }
  if (v.final == Label::unknown) throw ValidationError("verdict '" + v.id + "' has no final label");
  return v;
}

inline nlohmann::json summary_to_json(const Summary& s) {
  return {{"tp", s.tp},
          {"fp", s.fp},
          {"tn", s.tn},
          {"fn", s.fn},
          {"unlabeled", s.unlabeled},
          {"unscorable", s.unscorable},
          {"stage1_positive", s.stage1_positive},
          {"overturned", s.overturned},
          {"precision", detail::optional_json(s.precision())},
          {"recall", detail::optional_json(s.recall())}};
}

inline std::string summary_table(const Summary& s) {
  auto ratio = [](const std::optional<double>& r) {
    if (!r) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *r);
    return std::string(buf);
  };
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"true positives", std::to_string(s.tp)},
      {"false positives", std::to_string(s.fp)},
      {"true negatives", std::to_string(s.tn)},
      {"false negatives", std::to_string(s.fn)},
      {"stage-1 positives", std::to_string(s.stage1_positive)},
      {"overturned by stage 2", std::to_string(s.overturned)},
      {"unscorable", std::to_string(s.unscorable)},
      {"unlabeled", std::to_string(s.unlabeled)},
      {"precision", ratio(s.precision())},
      {"recall", ratio(s.recall())},
  };
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream out;
  for (const auto& [k, v] : rows) out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  return out.str();
}

}  // namespace rwprof
