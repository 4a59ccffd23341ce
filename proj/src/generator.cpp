#include "stp/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stp/rng.hpp"

namespace stp {

std::int64_t ActivitySegment::bytes(DirectionFilter filter) const {
  std::int64_t total = 0;
  for (const auto& e : events)
    if (matches(filter, e.direction)) total += e.size;
  return total;
}

void DeviceProfile::validate() const {
  if (segments.empty()) throw InvalidArgument("profile '" + name + "' has no segments");
  if (background_rate_up < 0 || background_rate_down < 0)
    throw InvalidArgument("background rates must be >= 0");
  if ((background_rate_up > 0 || background_rate_down > 0) && background_packet_size < 1)
    throw InvalidArgument("background packet size must be >= 1");
  for (const auto& s : segments) {
    if (s.events.empty()) throw InvalidArgument("segment with no events");
    if (s.duration < 1) throw InvalidArgument("segment duration must be >= 1 us");
    for (const auto& e : s.events)
      if (e.timestamp < 0 || e.timestamp >= s.duration || e.size < 1)
        throw InvalidArgument("segment event outside [0, duration) or empty");
  }
}

namespace {

void add_background(std::vector<TraceEvent>& out, const std::vector<ActivityLabel>& labels, Micros duration,
                    double rate, std::int64_t packet_size, Direction dir, double phase, const std::string& flow) {
  if (rate <= 0) return;
  const double interval = static_cast<double>(packet_size) * kMicrosPerSecond / rate;
  std::size_t li = 0;
  for (std::int64_t k = 0;; ++k) {
    const auto t = static_cast<Micros>(std::floor((static_cast<double>(k) + phase) * interval));
    if (t >= duration) break;
    while (li < labels.size() && labels[li].end <= t) ++li;
    if (li < labels.size() && labels[li].start <= t) continue;
    out.push_back(TraceEvent{t, dir, packet_size, flow, false});
  }
}

}  // namespace

Trace generate_trace(const DeviceProfile& profile, const GeneratorConfig& config) {
  if (!(config.p >= 0 && config.p <= 1)) throw InvalidArgument("p must be in [0, 1]");
  if (config.decision_tick < 1) throw InvalidArgument("decision tick must be >= 1 us");
  profile.validate();

  Trace trace;
  trace.duration = std::max<Micros>(config.duration, 0);
  if (trace.duration == 0) return trace;

  Rng rng(config.seed);
  std::vector<TraceEvent> events;
  Micros t = 0;
  while (t < trace.duration) {
    if (!rng.bernoulli(config.p)) {
      t += config.decision_tick;
      continue;
    }
    const auto& seg = profile.segments[rng.below(profile.segments.size())];
    for (const auto& e : seg.events) {
      if (t + e.timestamp >= trace.duration) break;
      events.push_back(TraceEvent{t + e.timestamp, e.direction, e.size, profile.name, false});
    }
    trace.labels.push_back(ActivityLabel{t, std::min(t + seg.duration, trace.duration), seg.kind});
    t += seg.duration;
  }

  add_background(events, trace.labels, trace.duration, profile.background_rate_up,
                 profile.background_packet_size, Direction::Up, 0.0, profile.name);
  add_background(events, trace.labels, trace.duration, profile.background_rate_down,
                 profile.background_packet_size, Direction::Down, 0.5, profile.name);

  std::stable_sort(events.begin(), events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.timestamp < b.timestamp; });
  trace.events = std::move(events);
  return trace;
}

ProfileExtraction profile_from_trace(const Trace& trace, const std::string& name) {
  if (trace.labels.empty()) throw InvalidArgument("no activities to extract");
  ProfileExtraction out;
  out.profile.name = name;

  std::int64_t bg_up = 0, bg_down = 0, bg_count = 0;
  Micros labelled = 0;
  std::size_t ei = 0;
  const auto& events = trace.events;
  for (const auto& l : trace.labels) {
    for (; ei < events.size() && events[ei].timestamp < l.start; ++ei) {
      (events[ei].direction == Direction::Up ? bg_up : bg_down) += events[ei].size;
      ++bg_count;
    }
    ActivitySegment seg;
    seg.duration = l.end - l.start;
    seg.kind = l.kind;
    for (; ei < events.size() && events[ei].timestamp < l.end; ++ei) {
      TraceEvent e = events[ei];
      e.timestamp -= l.start;
      seg.events.push_back(std::move(e));
    }
    labelled += seg.duration;
    if (seg.events.empty()) {
      out.warnings.push_back("label [" + std::to_string(l.start) + ", " + std::to_string(l.end) +
                             ") contains no events; skipped");
      continue;
    }
    out.profile.segments.push_back(std::move(seg));
  }
  for (; ei < events.size(); ++ei) {
    (events[ei].direction == Direction::Up ? bg_up : bg_down) += events[ei].size;
    ++bg_count;
  }
  if (out.profile.segments.empty()) throw InvalidArgument("no activities to extract: every label is empty");

  const Micros unlabelled = trace.duration - labelled;
  if (unlabelled > 0) {
    out.profile.background_rate_up = static_cast<double>(bg_up) * kMicrosPerSecond / unlabelled;
    out.profile.background_rate_down = static_cast<double>(bg_down) * kMicrosPerSecond / unlabelled;
  }
  if (bg_count > 0) out.profile.background_packet_size = std::max<std::int64_t>(1, (bg_up + bg_down) / bg_count);
  return out;
}

std::pair<double, double> peak_activity_rates(const DeviceProfile& profile) {
  auto peak = [&](Direction dir) {
    std::int64_t best = 0;
    for (const auto& seg : profile.segments) {
      // two-pointer sliding window over [t, t + 1 s)
      std::int64_t window = 0;
      std::size_t lo = 0;
      for (std::size_t hi = 0; hi < seg.events.size(); ++hi) {
        if (seg.events[hi].direction == dir) window += seg.events[hi].size;
        while (seg.events[hi].timestamp - seg.events[lo].timestamp >= kMicrosPerSecond) {
          if (seg.events[lo].direction == dir) window -= seg.events[lo].size;
          ++lo;
        }
        best = std::max(best, window);
      }
    }
    return static_cast<double>(best);
  };
  return {peak(Direction::Up), peak(Direction::Down)};
}

Micros default_period(const DeviceProfile& profile) {
  Micros longest = 1;
  for (const auto& s : profile.segments) longest = std::max(longest, s.duration);
  return ceil_div(longest, kMicrosPerSecond) * kMicrosPerSecond;
}

DeviceProfile synthetic_profile(const SyntheticProfileSpec& spec) {
  if (spec.segment_count < 1) throw InvalidArgument("segment_count must be >= 1");
  if (spec.min_duration < 1 || spec.max_duration < spec.min_duration)
    throw InvalidArgument("bad segment duration range");
  Rng rng(spec.seed);

  const auto n = static_cast<std::size_t>(spec.segment_count);
  std::vector<Micros> durations(n);
  for (auto& d : durations)
    d = spec.min_duration + static_cast<Micros>(rng.below(static_cast<std::uint64_t>(spec.max_duration - spec.min_duration + 1)));

  // standardized linear ramp in a seeded order: mean 0, population stddev 1
  std::vector<double> z(n, 0.0);
  if (n > 1) {
    for (std::size_t i = 0; i < n; ++i) z[i] = static_cast<double>(i) - static_cast<double>(n - 1) / 2;
    double var = 0;
    for (double v : z) var += v * v;
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& v : z) v /= sd;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(z[i], z[rng.below(i + 1)]);
  }

  DeviceProfile p;
  p.name = spec.name;
  for (std::size_t i = 0; i < n; ++i) {
    const double rate = spec.mean_rate * (1 + spec.rate_cv * z[i]);
    if (rate <= 0) throw InvalidArgument("rate_cv too large for segment_count");
    const auto total = static_cast<std::int64_t>(std::llround(rate * static_cast<double>(durations[i]) / kMicrosPerSecond));
    const auto up = static_cast<std::int64_t>(std::llround(static_cast<double>(total) * spec.up_fraction));

    ActivitySegment seg;
    seg.duration = durations[i];
    seg.kind = spec.name + "-activity-" + std::to_string(i);
    auto emit = [&](std::int64_t bytes, Direction dir, double phase) {
      const std::int64_t count = ceil_div(bytes, spec.packet_size);
      for (std::int64_t k = 0; k < count; ++k) {
        const std::int64_t size = k + 1 < count ? spec.packet_size : bytes - (count - 1) * spec.packet_size;
        const auto t = static_cast<Micros>((static_cast<double>(k) + phase) * static_cast<double>(seg.duration) /
                                           static_cast<double>(count));
        seg.events.push_back(TraceEvent{t, dir, size, spec.name, false});
      }
    };
    emit(up, Direction::Up, 0.0);
    emit(total - up, Direction::Down, 0.5);
    std::stable_sort(seg.events.begin(), seg.events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.timestamp < b.timestamp; });
    p.segments.push_back(std::move(seg));
  }
  return p;
}

void to_json(nlohmann::json& j, const DeviceProfile& p) {
  j = nlohmann::json{{"name", p.name},
                     {"background_rate_up", p.background_rate_up},
                     {"background_rate_down", p.background_rate_down},
                     {"background_packet_size", p.background_packet_size},
                     {"segments", nlohmann::json::array()}};
  for (const auto& s : p.segments) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : s.events) events.push_back({e.timestamp, to_string(e.direction), e.size});
    j["segments"].push_back({{"kind", s.kind}, {"duration_us", s.duration}, {"events", std::move(events)}});
  }
}

void from_json(const nlohmann::json& j, DeviceProfile& p) {
  p = DeviceProfile{};
  p.name = j.at("name").get<std::string>();
  p.background_rate_up = j.value("background_rate_up", 0.0);
  p.background_rate_down = j.value("background_rate_down", 0.0);
  p.background_packet_size = j.value("background_packet_size", std::int64_t{100});
  for (const auto& js : j.at("segments")) {
    ActivitySegment s;
    s.kind = js.value("kind", std::string("activity"));
    s.duration = js.at("duration_us").get<Micros>();
    for (const auto& je : js.at("events"))
      s.events.push_back(TraceEvent{je.at(0).get<Micros>(), parse_direction(je.at(1).get<std::string>()),
                                    je.at(2).get<std::int64_t>(), p.name, false});
    p.segments.push_back(std::move(s));
  }
  p.validate();
}

DeviceProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open profile " + path.string());
  return nlohmann::json::parse(in).get<DeviceProfile>();
}

}  // namespace stp
