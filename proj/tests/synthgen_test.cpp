#include <rwprof/consistency.hpp>
#include <rwprof/contrast.hpp>
#include <rwprof/corpus.hpp>
#include <rwprof/synthgen.hpp>

#include <gtest/gtest.h>

#include <map>

#include "support/fixtures.hpp"

using namespace rwprof;

namespace {

GenSpec spec(GenKind kind, std::uint64_t seed) {
  GenSpec s;
  s.kind = kind;
  s.seed = seed;
  return s;
}

std::map<std::string, std::uint64_t> file_totals(const Trace& t) {
  const auto catalogue = FileApiCatalogue::defaults();
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : t.events)
    if (catalogue.contains(t.api_name(e))) ++out[t.api_name(e)];
  return out;
}

}  // namespace

TEST(SplitMix64, KnownSequence) {
  // Reference values for seed 0 from the published algorithm.
  SplitMix64 r(0);
  EXPECT_EQ(r.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(r.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(r.next(), 0x06C45D188009454FULL);
}

TEST(SplitMix64, Distributions) {
  SplitMix64 r(1);
  double sum = 0.0, pois = 0.0, big = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    pois += static_cast<double>(r.poisson(4.0));
    big += static_cast<double>(r.poisson(500.0));
    const auto k = r.integer(-2, 2);
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 2);
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
  EXPECT_NEAR(pois / 20000, 4.0, 0.1);
  EXPECT_NEAR(big / 20000, 500.0, 1.0);
}

TEST(Generate, Deterministic) {
  for (auto kind : kAllGenKinds) {
    auto s = spec(kind, 17);
    s.duration = 30;
    EXPECT_EQ(serialize_native(generate(s)), serialize_native(generate(s))) << to_string(kind);
  }
  auto a = spec(GenKind::ransomware, 1), b = spec(GenKind::ransomware, 2);
  a.duration = b.duration = 20;
  EXPECT_NE(serialize_native(generate(a)), serialize_native(generate(b)));
}

TEST(Generate, LabelsIdsAndBounds) {
  for (auto kind : kAllGenKinds) {
    const auto t = generate(spec(kind, 5));
    EXPECT_EQ(t.label, label_for(kind));
    EXPECT_EQ(t.id, std::string(to_string(kind)) + "-5");
    EXPECT_TRUE(t.is_sorted());
    EXPECT_LT(t.max_ts(), 120.0);
    EXPECT_EQ(normalize(t).dropped, 0u);
  }
}

TEST(Generate, RansomwareUsesSixToTenFileApis) {
  for (std::size_t n : {1, 6, 7, 10, 14}) {
    auto s = spec(GenKind::ransomware, 3);
    s.n_apis = n;
    const auto apis = file_totals(generate(s)).size();
    EXPECT_EQ(apis, std::clamp<std::size_t>(n, 6, 10));
  }
}

TEST(Generate, RansomwareRateNearSpec) {
  const auto t = generate(spec(GenKind::ransomware, 9));
  std::uint64_t total = 0;
  for (const auto& [api, n] : file_totals(t)) total += n;
  EXPECT_NEAR(static_cast<double>(total) / 120.0, 2000.0, 150.0);
}

TEST(Generate, CopyAndMoveUseThreeApis) {
  for (auto kind : {GenKind::copy, GenKind::move})
    for (std::uint64_t seed : {1, 2, 3}) EXPECT_EQ(file_totals(generate(spec(kind, seed))).size(), 3u);
}

TEST(Generate, ExtractIsDominatedByOneApi) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto totals = file_totals(generate(spec(GenKind::extract, seed)));
    std::uint64_t sum = 0, top = 0;
    for (const auto& [api, n] : totals) {
      sum += n;
      top = std::max(top, n);
    }
    EXPECT_GE(static_cast<double>(top), 0.9 * static_cast<double>(sum));
  }
}

TEST(Generate, TwoPhaseKindsChangeApiSets) {
  for (auto kind : {GenKind::compress, GenKind::encrypt_tool, GenKind::remove}) {
    const auto t = generate(spec(kind, 4));
    std::set<std::string> early, late;
    const auto catalogue = FileApiCatalogue::defaults();
    for (const auto& e : t.events) {
      if (!catalogue.contains(t.api_name(e))) continue;
      (e.ts < 10.0 ? early : late).insert(t.api_name(e));
    }
    EXPECT_NE(early, late) << to_string(kind);
  }
}

TEST(Generate, ContrastProfiles) {
  const auto m = builtin_model();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EXPECT_GT(api_contrast_score(generate(spec(GenKind::ransomware, seed)), m), -10);
    EXPECT_LE(api_contrast_score(generate(spec(GenKind::git_like, seed)), m), -10);
    const auto b = contrast_breakdown(generate(spec(kAllGenKinds[2 + seed % 6], seed)), m);
    EXPECT_LE(b.benign_score, -7);
  }
}

TEST(Generate, ApiProfileReplacesDefaults) {
  auto s = spec(GenKind::copy, 2);
  s.api_profile = std::vector<std::string>{"WriteConsoleW", "NtDeleteKey"};
  const auto t = generate(s);
  const auto b = contrast_breakdown(t, builtin_model());
  EXPECT_EQ(b.rw_score, 1);
  EXPECT_EQ(b.benign_score, -1);
  EXPECT_EQ(b.contributions[1].calls, 12u);
}

// Separation among the benign kinds other than git_like, which is built to be
// consistent and left to the refinement stage.
TEST(Generate, RansomwareBelowEveryBenignKind) {
  ConsistencyParams p;
  const auto catalogue = FileApiCatalogue::defaults();
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const double rw = trace_consistency(generate(spec(GenKind::ransomware, seed)), p, catalogue).aggregate;
    for (auto kind : kAllGenKinds) {
      if (kind == GenKind::ransomware || kind == GenKind::git_like) continue;
      EXPECT_LT(rw, trace_consistency(generate(spec(kind, seed)), p, catalogue).aggregate)
          << to_string(kind) << " seed " << seed;
    }
  }
}

TEST(Generate, SpecValidation) {
  auto s = spec(GenKind::copy, 1);
  s.duration = 0;
  EXPECT_THROW(generate(s), ValidationError);
  s = spec(GenKind::copy, 1);
  s.rate = -1;
  EXPECT_THROW(generate(s), ValidationError);
  EXPECT_THROW(parse_gen_kind("worm"), ValidationError);
  EXPECT_EQ(parse_gen_kind("delete"), GenKind::remove);
}

TEST(StandardCorpus, Composition) {
  const auto specs = standard_corpus_specs();
  ASSERT_EQ(specs.size(), 100u);
  std::size_t rw = 0, git = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(specs[i].seed, i + 1);
    rw += specs[i].kind == GenKind::ransomware;
    git += specs[i].kind == GenKind::git_like;
  }
  EXPECT_EQ(rw, 50u);
  EXPECT_EQ(git, 5u);
  EXPECT_THROW(standard_corpus_specs(1, 2, 3), ValidationError);
}

TEST(Corpus, WritesFilesAndManifest) {
  fixture::TempDir dir;
  std::vector<GenSpec> specs;
  for (std::uint64_t i = 0; i < 10; ++i) {
    auto s = spec(kAllGenKinds[i % 9], i);
    s.duration = 10;
    s.rate = 50;
    specs.push_back(s);
  }
  const auto manifest = write_corpus(specs, dir / "corpus");
  EXPECT_EQ(manifest.size(), 10u);
  const auto loaded = load_corpus(dir / "corpus");
  ASSERT_EQ(loaded.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(loaded[i], generate(specs[i]));
    EXPECT_EQ(loaded[i].label, label_for(specs[i].kind));
  }
}

TEST(Corpus, Preconditions) {
  EXPECT_THROW(generate_corpus(std::vector<GenSpec>{}), ValidationError);
  const std::vector<GenSpec> dup = {spec(GenKind::copy, 1), spec(GenKind::copy, 1)};
  EXPECT_THROW(generate_corpus(dup), ValidationError);
}

TEST(GenSpecJson, ParsesAndValidates) {
  fixture::TempDir dir;
  dir.write("m.json",
            R"([{"kind":"delete","seed":3,"duration":30},{"kind":"ransomware","id":"x","api_profile":["A"]}])");
  const auto specs = read_gen_specs(dir / "m.json");
  ASSERT_EQ(specs.size(), 2u);
  EXPECT_EQ(specs[0].kind, GenKind::remove);
  EXPECT_EQ(specs[0].duration, 30.0);
  EXPECT_EQ(specs[1].effective_id(), "x");
  dir.write("bad.json", R"([{"kind":"worm"}])");
  EXPECT_THROW(read_gen_specs(dir / "bad.json"), ValidationError);
  dir.write("obj.json", R"({"kind":"copy"})");
  EXPECT_THROW(read_gen_specs(dir / "obj.json"), ValidationError);
}
