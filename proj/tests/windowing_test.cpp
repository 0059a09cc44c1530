#include <rwprof/windowing.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace rwprof;

TEST(BinEvents, TwoEventsInBinZero) {
  auto s = bin_events(fixture::trace({{0.1, "A"}, {0.9, "A"}}));
  ASSERT_EQ(s.total_bins(), 1u);
  EXPECT_EQ(s.count(0, *s.find_api("A")), 2u);
}

TEST(BinEvents, BoundaryGoesToNextBin) {
  auto s = bin_events(fixture::trace({{2.0, "A"}}));
  ASSERT_EQ(s.total_bins(), 3u);
  EXPECT_EQ(s.count(2, 0), 1u);
  EXPECT_EQ(s.count(1, 0), 0u);
}

TEST(BinEvents, DeclaredDurationExtendsSeries) {
  auto s = bin_events(fixture::trace({{0.5, "A"}}, 10.0));
  EXPECT_EQ(s.total_bins(), 10u);
  EXPECT_EQ(s.span(), 10.0);
}

TEST(BinEvents, RejectsBadWidth) {
  EXPECT_THROW(bin_events(fixture::trace({}), 0.0), ValidationError);
  EXPECT_THROW(bin_events(fixture::trace({}), -1.0), ValidationError);
}

TEST(BinEvents, UniformThousandEventsOverTenSeconds) {
  Trace t;
  for (int i = 0; i < 1000; ++i) t.add_event(i * 0.01, i % 2 ? "A" : "B");
  auto s = bin_events(t);
  ASSERT_EQ(s.total_bins(), 10u);
  for (std::size_t b = 0; b < 10; ++b) EXPECT_EQ(s.count(b, 0) + s.count(b, 1), 100u);
}

TEST(BinEvents, MatchesCountOracleOnRandomTraces) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    Trace t;
    std::uniform_real_distribution<double> u(0.0, 50.0);
    std::uniform_int_distribution<int> api(0, 6);
    for (int i = 0; i < 3000; ++i) t.add_event(u(rng), "api" + std::to_string(api(rng)));
    for (double width : {1.0, 0.5, 2.5}) {
      const auto s = bin_events(t, width);
      const auto oracle_counts = oracle::bin_counts(t, width);
      std::uint64_t seen = 0;
      for (std::size_t b = 0; b < s.total_bins(); ++b) {
        for (const auto& c : s.bin(b)) {
          EXPECT_EQ(c.count, oracle_counts.at(b).at(s.api_names()[c.api]));
          seen += c.count;
        }
      }
      EXPECT_EQ(seen, t.events.size());
    }
  }
}

TEST(BinEvents, UnsortedInputMatchesSorted) {
  auto t = fixture::trace({{3.5, "A"}, {0.5, "B"}, {3.1, "B"}, {1.0, "A"}});
  auto sorted = normalize(t).trace;
  auto a = bin_events(t), b = bin_events(sorted);
  ASSERT_EQ(a.total_bins(), b.total_bins());
  for (std::size_t i = 0; i < a.total_bins(); ++i)
    for (const std::string name : {"A", "B"})
      EXPECT_EQ(a.count(i, *a.find_api(name)), b.count(i, *b.find_api(name)));
}

TEST(TopK, OrdersByCount) {
  Trace t;
  fixture::sprinkle(t, "NtWriteFile", 100, 10);
  fixture::sprinkle(t, "NtReadFile", 50, 10);
  fixture::sprinkle(t, "NtCreateFile", 10, 10);
  fixture::sprinkle(t, "CryptEncrypt", 500, 10);
  auto top = top_k_file_apis(bin_events(t), FileApiCatalogue::defaults(), 2);
  EXPECT_EQ(top, (std::vector<std::string>{"NtWriteFile", "NtReadFile"}));
}

TEST(TopK, NoCatalogueApis) {
  auto t = fixture::trace({{0.0, "CryptEncrypt"}});
  EXPECT_TRUE(top_k_file_apis(bin_events(t), FileApiCatalogue::defaults(), 10).empty());
}

TEST(TopK, TiesBreakLexicographically) {
  Trace t;
  fixture::sprinkle(t, "NtWriteFile", 7, 5);
  fixture::sprinkle(t, "NtReadFile", 7, 5);
  auto top = top_k_file_apis(bin_events(t), FileApiCatalogue::defaults(), 1);
  EXPECT_EQ(top, (std::vector<std::string>{"NtReadFile"}));
  EXPECT_THROW(top_k_file_apis(bin_events(t), FileApiCatalogue::defaults(), 0), ValidationError);
}

TEST(WindowVector, MeanRateOverThreeSeconds) {
  Trace t;
  const int counts[] = {3, 6, 9};
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < counts[s]; ++i) t.add_event(s + 0.05 * i, "NtReadFile");
  const std::vector<std::string> basis = {"NtReadFile"};
  auto w = window_vector(bin_events(t), basis, 0.0, 3.0);
  EXPECT_DOUBLE_EQ(w.values[0], 6.0);
  EXPECT_DOUBLE_EQ(window_vector(bin_events(t), basis, 1.0, 1.0).values[0], 6.0);
}

TEST(WindowVector, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  std::uniform_int_distribution<int> api(0, 4);
  const std::vector<std::string> names = {"NtReadFile", "NtWriteFile", "NtCreateFile", "NtOpenFile",
                                          "Absent"};
  Trace t;
  for (int i = 0; i < 5000; ++i) t.add_event(u(rng), names[static_cast<std::size_t>(api(rng)) % 4]);
  const auto s = bin_events(t);
  for (double start = 0; start < 26; start += 1.0) {
    for (double len : {1.0, 3.0, 4.0}) {
      auto w = window_vector(s, names, start, len);
      auto o = oracle::window(t, names, start, len);
      for (std::size_t i = 0; i < names.size(); ++i) EXPECT_NEAR(w.values[i], o[i], 1e-12);
    }
  }
}

TEST(WindowVector, Preconditions) {
  auto s = bin_events(fixture::trace({{0.0, "A"}}));
  const std::vector<std::string> basis = {"A"};
  EXPECT_THROW(window_vector(s, basis, 0.0, 0.0), ValidationError);
  EXPECT_THROW(window_vector(s, basis, -1.0, 1.0), ValidationError);
  EXPECT_THROW(window_vector(s, {}, 0.0, 1.0), ValidationError);
}

TEST(Catalogue, ParsesCommentsAndBlankLines) {
  std::istringstream in("# file apis\n  NtReadFile  \n\nNtWriteFile # trailing\n");
  auto c = FileApiCatalogue::parse(in);
  EXPECT_EQ(c.names().size(), 2u);
  EXPECT_TRUE(c.contains("NtReadFile"));
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(FileApiCatalogue::parse(empty), ValidationError);
}
