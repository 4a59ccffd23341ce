#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stp/decision.hpp"
#include "stp/detection.hpp"
#include "stp/trace.hpp"

namespace stp {

inline constexpr std::string_view kCoverFlowId = "cover";
inline constexpr std::string_view kTunnelFlowId = "vpn";

struct ShapingConfig {
  double rate_up = 0;    ///< R_u, bytes/s
  double rate_down = 0;  ///< R_d, bytes/s
  Micros period = 10 * kMicrosPerSecond;  ///< T
  DecisionSpec decision = BernoulliDecision{};
  /// nullopt: trigger on ground-truth labels; otherwise threshold detection
  /// on the unshaped trace.
  std::optional<ThresholdDetector> detector;
  std::int64_t cover_packet_size = 1400;
  /// Width of the absolute time grid the constant-rate pattern is laid on.
  Micros fill_bin = kMicrosPerSecond;
  std::uint64_t seed = 0;  ///< pad-offset stream

  double rate() const { return rate_up + rate_down; }  ///< R = R_u + R_d
  std::int64_t budget(Direction d) const;              ///< round(R_dir * T) bytes
  void validate() const;
};

/// One T-long instance of the fixed traffic pattern.
struct PatternInstance {
  Micros start = 0;
  bool genuine = false;  ///< overlaps user activity

  bool operator==(const PatternInstance&) const = default;
};

/// Maximal run of back-to-back pattern instances.
struct PaddedSpan {
  Micros start = 0;
  Micros end = 0;
  bool genuine = false;

  bool operator==(const PaddedSpan&) const = default;
};

struct PaddingSchedule {
  std::vector<PaddedSpan> spans;
  std::vector<PatternInstance> instances;
  Micros period_length = 0;

  bool operator==(const PaddingSchedule&) const = default;
};

/// A slice whose real traffic in one direction exceeded the pattern budget.
struct OverflowSlice {
  Micros start = 0;
  Micros end = 0;
  Direction direction = Direction::Up;
  std::int64_t real_bytes = 0;
  std::int64_t budget = 0;

  bool operator==(const OverflowSlice&) const = default;
};

struct ShapedResult {
  Trace trace;  ///< original events verbatim plus is_cover events
  PaddingSchedule schedule;
  std::vector<OverflowSlice> overflow;

  bool operator==(const ShapedResult&) const = default;
};

/// Stochastic traffic padding.
///
/// Period boundaries are processed in order. At each boundary the decision
/// function is consulted; if it fires, a start offset is drawn uniformly
/// from [0, T). A start inside (or adjacent to) the current span appends one
/// instance at the span end instead of starting a new one. User activity
/// found outside every instance starts a genuine instance at that time and
/// discards a not-yet-started decoy instance. Within every instance, real
/// bytes plus cover bytes equal R_dir * T per direction unless real traffic
/// alone exceeds it (overflow: no cover, slice recorded).
ShapedResult stp_shape(const Trace& trace, const ShapingConfig& config);

/// Independent link padding: one span over [0, duration) shaped to a
/// constant rate, laid out as `period`-long slices.
ShapedResult ilp_shape(const Trace& trace, double rate_up, double rate_down,
                       std::int64_t cover_packet_size = 1400, Micros period = kMicrosPerSecond);

/// WAN view of a device blocked at the home firewall.
Trace firewall_filter(const Trace& trace);

struct NamedTrace {
  std::string device;
  Trace trace;
};

/// Merges device traces into one tunnel flow. Labels from different devices
/// that overlap are merged into one label.
Trace vpn_aggregate(std::span<const NamedTrace> traces, std::int64_t encapsulation_bytes = 0);

struct DevicePacket {
  Micros arrival = 0;
  std::int64_t size = 1;
};

struct SendRecord {
  Micros time = 0;
  std::int64_t size = 0;
  bool is_cover = false;
  std::int64_t packet_index = -1;  ///< input index, -1 for cover
  int fragment = 0;
  int fragment_count = 1;
};

struct TokenBucketLog {
  std::vector<SendRecord> sends;
  std::int64_t unsent_packets = 0;  ///< still queued at end of run
};

/// Token bucket (capacity one token = one cover packet) feeding a strict
/// two-level priority queue: device packets always beat cover packets.
/// Send opportunity k is at ceil(k * cover_size / rate) seconds.
TokenBucketLog token_bucket_pad(std::span<const DevicePacket> packets, double rate,
                                std::int64_t cover_size, Micros duration);

/// One row per pattern instance: `start_us,end_us,genuine`.
void write_schedule_csv(std::ostream& out, const PaddingSchedule& schedule);
PaddingSchedule read_schedule_csv(std::istream& in);
nlohmann::json overflow_report(const ShapedResult& result);

}  // namespace stp
