#pragma once

#include <vector>

#include "stp/trace.hpp"

namespace stp {

/// Half-open time interval [start, end).
struct Interval {
  Micros start = 0;
  Micros end = 0;

  bool overlaps(const Interval& o) const { return start < o.end && o.start < end; }
  bool operator==(const Interval&) const = default;
};

/// Flags a bin whose bytes exceed mean + k * stddev of the whole series.
struct ThresholdDetector {
  Micros bin = kMicrosPerSecond;
  double k = 3.0;
  Micros min_quiet_gap = 2 * kMicrosPerSecond;  ///< flagged runs closer than this merge

  void validate() const;
};

/// Rate-threshold activity detection on the bidirectional rate series.
/// A zero-variance series yields no detections.
std::vector<Interval> detect_activities(const Trace& trace, const ThresholdDetector& det);

}  // namespace stp
