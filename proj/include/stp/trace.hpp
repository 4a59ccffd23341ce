#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "stp/common.hpp"

namespace stp {

/// One packet-metadata record.
struct TraceEvent {
  Micros timestamp = 0;
  Direction direction = Direction::Up;
  std::int64_t size = 1;
  std::string flow_id;
  bool is_cover = false;

  bool operator==(const TraceEvent&) const = default;
};

/// Ground-truth user activity interval [start, end).
struct ActivityLabel {
  Micros start = 0;
  Micros end = 0;
  std::string kind;

  bool operator==(const ActivityLabel&) const = default;
};

/// Timestamp-ordered events plus ground-truth labels. Every event timestamp
/// is < duration; labels are sorted and non-overlapping.
struct Trace {
  std::vector<TraceEvent> events;
  Micros duration = 0;
  std::vector<ActivityLabel> labels;

  std::int64_t total_bytes(DirectionFilter filter = DirectionFilter::Both) const;

  bool operator==(const Trace&) const = default;
};

/// Throws InvalidArgument if any Trace invariant is violated.
void validate(const Trace& trace);

struct PeriodGrid {
  Micros period_length = 0;
  std::int64_t period_count = 0;
  std::vector<bool> activity_flags;

  double activity_fraction() const;
};

struct TraceStats {
  double mean_activity_bytes = 0;      ///< mean bytes per activity period
  bool mean_activity_undefined = false;
  double mean_background_bytes = 0;    ///< mean bytes per non-activity period
  bool mean_background_undefined = false;
  double activity_fraction = 0;
  double peak_rate_up = 0;             ///< bytes/s, max over 1 s bins
  double peak_rate_down = 0;
  double activity_rate_stddev_ratio = 0;
};

struct LoadedTrace {
  Trace trace;
  bool resorted = false;  ///< input timestamps were not monotone
};

/// Companion label file for a trace file: "x.csv" -> "x.labels.csv".
std::filesystem::path label_path_for(const std::filesystem::path& trace_path);

/// Reads a trace CSV and, when present, its companion label CSV.
LoadedTrace load_trace(const std::filesystem::path& path);

std::vector<TraceEvent> parse_trace_csv(std::istream& in);
std::vector<ActivityLabel> parse_label_csv(std::istream& in);

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_label_csv(std::ostream& out, const std::vector<ActivityLabel>& labels);

/// Writes the trace CSV and its companion label CSV.
void save_trace(const std::filesystem::path& path, const Trace& trace);

/// Bytes per bin; bin i covers [i*bin, (i+1)*bin). Length ceil(duration/bin).
std::vector<std::int64_t> rate_series(const Trace& trace, Micros bin, DirectionFilter filter);

PeriodGrid segment_periods(const Trace& trace, Micros period_length);

TraceStats compute_stats(const Trace& trace, const PeriodGrid& grid);

void to_json(nlohmann::json& j, const TraceStats& s);

}  // namespace stp
