#pragma once

#include <rwprof/trace.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fixture {

struct Ev {
  double ts;
  std::string api;
};

inline rwprof::Trace trace(std::initializer_list<Ev> events, std::optional<double> duration = {},
                           std::string id = "t") {
  rwprof::Trace t;
  t.id = std::move(id);
  t.declared_duration = duration;
  for (const auto& e : events) t.add_event(e.ts, e.api);
  return t;
}

// Every second in [0, seconds) gets counts[i] calls of apis[i], spread evenly.
inline rwprof::Trace steady(const std::vector<std::string>& apis, const std::vector<int>& counts,
                            int seconds, std::string id = "steady") {
  rwprof::Trace t;
  t.id = std::move(id);
  t.declared_duration = seconds;
  for (int s = 0; s < seconds; ++s) {
    int total = 0;
    for (int c : counts) total += c;
    int j = 0;
    for (std::size_t i = 0; i < apis.size(); ++i)
      for (int k = 0; k < counts[i]; ++k, ++j) t.add_event(s + (j + 0.5) / total, apis[i]);
  }
  return t;
}

// Adds `calls` calls of api spread over [0, duration).
inline void sprinkle(rwprof::Trace& t, const std::string& api, int calls, double duration) {
  for (int i = 0; i < calls; ++i) t.add_event(duration * (i + 0.5) / calls, api);
  std::stable_sort(t.events.begin(), t.events.end(),
                   [](const rwprof::ApiEvent& a, const rwprof::ApiEvent& b) { return a.ts < b.ts; });
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rwprof-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double hi = 100.0) {
  std::uniform_real_distribution<double> u(0.0, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace fixture
