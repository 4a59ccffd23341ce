#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "stp/trace.hpp"

namespace stp::test {

inline TraceEvent ev(Micros t, Direction d, std::int64_t size, std::string flow = "dev") {
  return TraceEvent{t, d, size, std::move(flow), false};
}

inline constexpr Micros sec(double s) { return static_cast<Micros>(s * kMicrosPerSecond); }

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("stp-test-" + std::to_string(rd()) + std::to_string(rd()));
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

 private:
  std::filesystem::path path_;
};

/// Small labeled trace: activities are dense bursts, background sparse.
inline Trace random_trace(std::mt19937_64& gen, Micros duration, int max_labels) {
  Trace t;
  t.duration = duration;
  std::uniform_int_distribution<int> nlab(0, max_labels);
  const int n = nlab(gen);
  Micros cursor = 0;
  for (int i = 0; i < n && cursor < duration; ++i) {
    const Micros gap = std::uniform_int_distribution<Micros>(0, duration / (n + 1))(gen);
    const Micros len = std::uniform_int_distribution<Micros>(1, std::max<Micros>(1, duration / (2 * (n + 1))))(gen);
    const Micros start = cursor + gap;
    const Micros end = std::min(duration, start + len);
    if (start >= end) break;
    t.labels.push_back({start, end, "a" + std::to_string(i)});
    cursor = end;
  }
  std::uniform_int_distribution<std::int64_t> size(1, 1500);
  for (const auto& l : t.labels) {
    const int k = std::uniform_int_distribution<int>(1, 20)(gen);
    for (int j = 0; j < k; ++j) {
      const Micros ts = std::uniform_int_distribution<Micros>(l.start, l.end - 1)(gen);
      t.events.push_back(ev(ts, gen() % 2 ? Direction::Up : Direction::Down, size(gen)));
    }
  }
  const int bg = std::uniform_int_distribution<int>(0, 10)(gen);
  for (int j = 0; j < bg; ++j) {
    const Micros ts = std::uniform_int_distribution<Micros>(0, duration - 1)(gen);
    const bool inside = std::any_of(t.labels.begin(), t.labels.end(),
                                    [&](const ActivityLabel& l) { return ts >= l.start && ts < l.end; });
    if (!inside) t.events.push_back(ev(ts, gen() % 2 ? Direction::Up : Direction::Down, std::uniform_int_distribution<std::int64_t>(1, 100)(gen)));
  }
  std::stable_sort(t.events.begin(), t.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.timestamp < b.timestamp; });
  return t;
}

}  // namespace stp::test
