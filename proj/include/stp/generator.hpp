#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "stp/trace.hpp"

namespace stp {

/// A recorded user activity: events timestamped relative to its start.
struct ActivitySegment {
  std::vector<TraceEvent> events;
  Micros duration = 0;
  std::string kind;

  std::int64_t bytes(DirectionFilter filter = DirectionFilter::Both) const;
};

struct DeviceProfile {
  std::string name;
  std::vector<ActivitySegment> segments;
  double background_rate_up = 0;    ///< bytes/s
  double background_rate_down = 0;  ///< bytes/s
  std::int64_t background_packet_size = 100;

  void validate() const;
};

struct GeneratorConfig {
  double p = 0.01;                        ///< activity probability per decision
  Micros duration = 0;
  Micros decision_tick = kMicrosPerSecond;
  std::uint64_t seed = 0;
};

/// Replays profile segments as a Bernoulli process.
///
/// Decisions happen at t = 0, tick, 2*tick, ... . Each decision consumes one
/// uniform draw; when it fires (probability p) a second draw picks the
/// segment uniformly, the segment is replayed from t, and the next decision
/// is made at t + segment.duration rather than t + tick. Background packets
/// are evenly spaced and suppressed inside replays.
Trace generate_trace(const DeviceProfile& profile, const GeneratorConfig& config);

struct ProfileExtraction {
  DeviceProfile profile;
  std::vector<std::string> warnings;
};

/// One segment per label with events re-based to the label start. Labels
/// containing no events are skipped with a warning.
ProfileExtraction profile_from_trace(const Trace& trace, const std::string& name = "device");

/// Per-direction peak bytes in any sliding 1 s window of any segment.
/// These are the default STP pattern rates for the profile.
std::pair<double, double> peak_activity_rates(const DeviceProfile& profile);

/// Smallest whole number of seconds >= the longest segment.
Micros default_period(const DeviceProfile& profile);

struct SyntheticProfileSpec {
  std::string name;
  int segment_count = 7;
  Micros min_duration = kMicrosPerSecond;
  Micros max_duration = kMicrosPerSecond;
  double mean_rate = 10'000;   ///< bytes/s over both directions
  double up_fraction = 0.3;
  double rate_cv = 0.05;       ///< stddev/mean of per-segment mean rates
  std::int64_t packet_size = 500;
  std::uint64_t seed = 1;
};

/// Builds a device profile whose per-segment mean rates have exactly the
/// requested coefficient of variation (up to byte rounding).
DeviceProfile synthetic_profile(const SyntheticProfileSpec& spec);

void to_json(nlohmann::json& j, const DeviceProfile& p);
void from_json(const nlohmann::json& j, DeviceProfile& p);

DeviceProfile load_profile(const std::filesystem::path& path);

}  // namespace stp
