#include <rwprof/pipeline.hpp>
#include <rwprof/synthgen.hpp>

#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"

using namespace rwprof;

namespace {

Trace gen(GenKind kind, std::uint64_t seed) {
  GenSpec s;
  s.kind = kind;
  s.seed = seed;
  return generate(s);
}

void expect_invariants(const Verdict& v, const PipelineConfig& c) {
  if (v.unscorable) {
    EXPECT_FALSE(v.stage1_positive);
    EXPECT_EQ(v.final, Label::benign);
    return;
  }
  ASSERT_TRUE(v.stage1_score);
  EXPECT_EQ(v.stage1_positive, *v.stage1_score < c.stage1_threshold);
  EXPECT_EQ(v.contrast_score.has_value(), v.stage1_positive);
  if (!v.stage1_positive) EXPECT_EQ(v.final, Label::benign);
  if (v.final == Label::ransomware) EXPECT_TRUE(v.stage1_positive);
  if (v.stage1_positive && c.stage2_threshold)
    EXPECT_EQ(v.final, *v.contrast_score <= *c.stage2_threshold ? Label::benign : Label::ransomware);
}

}  // namespace

TEST(Classify, RansomwareSeedSeven) {
  const PipelineConfig c;
  const auto v = classify(gen(GenKind::ransomware, 7), c);
  expect_invariants(v, c);
  EXPECT_TRUE(v.stage1_positive);
  EXPECT_GT(*v.contrast_score, -10);
  EXPECT_EQ(v.final, Label::ransomware);
  ASSERT_TRUE(v.span);
  EXPECT_LT(v.span->start, v.span->end);
  EXPECT_FALSE(v.contributions.empty());
}

TEST(Classify, GitLikeIsOverturned) {
  const PipelineConfig c;
  const auto v = classify(gen(GenKind::git_like, 99), c);
  expect_invariants(v, c);
  EXPECT_TRUE(v.stage1_positive);
  EXPECT_LE(*v.contrast_score, -10);
  EXPECT_EQ(v.final, Label::benign);
}

TEST(Classify, BenignRandomIsStageOneNegative) {
  const PipelineConfig c;
  const auto v = classify(gen(GenKind::benign_random, 7), c);
  expect_invariants(v, c);
  EXPECT_FALSE(v.stage1_positive);
  EXPECT_FALSE(v.contrast_score);
  EXPECT_TRUE(v.contributions.empty());
}

TEST(Classify, UnscorableIsFlaggedBenign) {
  const PipelineConfig c;
  const auto quiet = classify(fixture::steady({"CryptEncrypt"}, {3}, 30), c);
  EXPECT_EQ(quiet.unscorable, UnscorableTrace::Reason::no_file_activity);
  EXPECT_EQ(quiet.final, Label::benign);
  const auto brief = classify(fixture::trace({{0.0, "NtReadFile"}}), c);
  EXPECT_EQ(brief.unscorable, UnscorableTrace::Reason::insufficient_duration);
}

TEST(Classify, InvariantsAcrossKindsAndConfigs) {
  for (auto kind : kAllGenKinds) {
    for (std::uint64_t seed : {3, 11}) {
      const auto t = gen(kind, seed);
      for (auto metric : kAllMetrics) {
        PipelineConfig c;
        c.consistency.metric = metric;
        c.stage1_threshold = default_stage1_threshold(metric);
        const auto refined = classify(t, c);
        expect_invariants(refined, c);
        c.stage2_threshold.reset();
        const auto plain = classify(t, c);
        expect_invariants(plain, c);
        EXPECT_EQ(plain.final == Label::ransomware, plain.stage1_positive);
        EXPECT_EQ(plain.stage1_positive, refined.stage1_positive);
        if (refined.final == Label::ransomware) EXPECT_EQ(plain.final, Label::ransomware);
      }
    }
  }
}

TEST(Classify, DeterministicAndOrderIndependent) {
  auto t = gen(GenKind::ransomware, 5);
  const PipelineConfig c;
  const auto a = classify(t, c);
  std::mt19937_64 rng(4);
  std::shuffle(t.events.begin(), t.events.end(), rng);
  const auto b = classify(t, c);
  EXPECT_EQ(verdict_to_json(a), verdict_to_json(b));
}

TEST(Calibrate, SeparableMidpoint) {
  const auto c = calibrate_threshold({{"b", Label::benign, 10.0}, {"a", Label::ransomware, 2.0}});
  EXPECT_TRUE(c.separable);
  EXPECT_EQ(c.threshold, 6.0);
  EXPECT_TRUE(c.warnings.empty());
  EXPECT_EQ(c.scores.front().id, "a");
}

TEST(Calibrate, SeparableThresholdBetweenExtremes) {
  std::vector<LabeledScore> s;
  for (int i = 0; i < 10; ++i) {
    s.push_back({"r" + std::to_string(i), Label::ransomware, i * 0.5});
    s.push_back({"b" + std::to_string(i), Label::benign, 20.0 + i});
  }
  const auto c = calibrate_threshold(s);
  EXPECT_GT(c.threshold, 4.5);
  EXPECT_LT(c.threshold, 20.0);
}

TEST(Calibrate, OverlapWarnsAndKeepsRecall) {
  const auto c = calibrate_threshold({{"r1", Label::ransomware, 5},
                                      {"r2", Label::ransomware, 9},
                                      {"b1", Label::benign, 3},
                                      {"b2", Label::benign, 11}});
  EXPECT_FALSE(c.separable);
  EXPECT_EQ(c.threshold, 10.0);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("1 benign"), std::string::npos);
}

TEST(Calibrate, IdenticalScoresDegenerate) {
  const auto c = calibrate_threshold({{"r", Label::ransomware, 4}, {"b", Label::benign, 4}});
  EXPECT_FALSE(c.separable);
  EXPECT_EQ(c.threshold, 5.0);
  EXPECT_FALSE(c.warnings.empty());
}

TEST(Calibrate, SingleClassFails) {
  EXPECT_THROW(calibrate_threshold({{"r", Label::ransomware, 4}}), ValidationError);
  EXPECT_THROW(calibrate_threshold({{"r", Label::benign, 4}, {"u", Label::unknown, 1}}), ValidationError);
}

TEST(Calibrate, Stage1SkipsUnscorable) {
  std::vector<Trace> corpus = {gen(GenKind::ransomware, 1), gen(GenKind::benign_random, 2),
                               fixture::steady({"CryptEncrypt"}, {2}, 20)};
  corpus[2].label = Label::benign;
  corpus[2].id = "quiet";
  const auto c = calibrate_stage1(corpus, {}, FileApiCatalogue::defaults());
  EXPECT_TRUE(c.separable);
  EXPECT_EQ(c.scores.size(), 2u);
  EXPECT_EQ(c.warnings.size(), 1u);
}

TEST(Summary, AllCorrect) {
  std::vector<Verdict> v(4);
  v[0].label = v[0].final = Label::ransomware;
  v[1].label = v[1].final = Label::ransomware;
  v[2].label = Label::benign;
  v[3].label = Label::unknown;
  const auto s = summarize(v);
  EXPECT_EQ(s.precision(), 1.0);
  EXPECT_EQ(s.recall(), 1.0);
  EXPECT_EQ(s.unlabeled, 1u);
}

TEST(Summary, OneFalsePositive) {
  std::vector<Verdict> v;
  for (int i = 0; i < 5; ++i) {
    Verdict r;
    r.label = r.final = Label::ransomware;
    v.push_back(r);
  }
  for (int i = 0; i < 5; ++i) {
    Verdict b;
    b.label = Label::benign;
    b.final = i == 0 ? Label::ransomware : Label::benign;
    v.push_back(b);
  }
  const auto s = summarize(v);
  EXPECT_EQ(s.recall(), 1.0);
  EXPECT_DOUBLE_EQ(*s.precision(), 5.0 / 6.0);
  EXPECT_EQ(summarize(std::vector<Verdict>{}).precision(), std::nullopt);
  EXPECT_NE(summary_table(s).find("false positives"), std::string::npos);
}

TEST(Batch, MatchesSequentialAndRecount) {
  std::vector<Trace> corpus;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    corpus.push_back(gen(GenKind::ransomware, seed));
    corpus.push_back(gen(kAllGenKinds[1 + seed % 8], 100 + seed));
  }
  const PipelineConfig c;
  const auto serial = batch_classify(corpus, c, 1);
  const auto parallel = batch_classify(corpus, c, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i)
    EXPECT_EQ(verdict_to_json(serial[i]), verdict_to_json(parallel[i]));
  EXPECT_TRUE(std::is_sorted(serial.begin(), serial.end(),
                             [](const Verdict& a, const Verdict& b) { return a.id < b.id; }));

  Summary recount;
  for (const auto& t : corpus) {
    const bool predicted = classify(t, c).final == Label::ransomware;
    if (t.label == Label::ransomware) ++(predicted ? recount.tp : recount.fn);
    else ++(predicted ? recount.fp : recount.tn);
  }
  const auto s = summarize(serial);
  EXPECT_EQ(s.tp, recount.tp);
  EXPECT_EQ(s.fp, recount.fp);
  EXPECT_EQ(s.tn, recount.tn);
  EXPECT_EQ(s.fn, recount.fn);
}

TEST(Batch, ParallelForPropagatesFirstError) {
  EXPECT_THROW(parallel_for(50, 4,
                            [](std::size_t i) {
                              if (i == 17) throw IoError("boom");
                            }),
               IoError);
}

TEST(VerdictJson, RoundTrip) {
  const auto v = classify(gen(GenKind::git_like, 3), PipelineConfig{});
  const auto j = verdict_to_json(v);
  EXPECT_EQ(j.at("explanation").at(0).at("kind"), "window");
  const auto back = verdict_from_json(j);
  EXPECT_EQ(verdict_to_json(back).at("final"), j.at("final"));
  EXPECT_EQ(back.contrast_score, v.contrast_score);
  EXPECT_THROW(verdict_from_json(nlohmann::json{{"id", "x"}}), ValidationError);
}

TEST(PipelineConfig, Validation) {
  PipelineConfig c;
  c.stage1_threshold = std::numeric_limits<double>::infinity();
  EXPECT_THROW(c.validate(), ValidationError);
}
