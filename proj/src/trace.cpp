#include "stp/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace stp {
namespace {

constexpr std::string_view kTraceHeader = "timestamp_us,direction,bytes,flow_id,is_cover";
constexpr std::string_view kLabelHeader = "start_us,end_us,kind";

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view field, std::size_t line, const char* name) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  return v;
}

// Reads lines, checks the header, and hands each data row to `row`.
template <class RowFn>
void read_rows(std::istream& in, std::string_view header, RowFn&& row) {
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line != header) throw ParseError(lineno, "expected header '" + std::string(header) + "'");
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    row(std::string_view(line), lineno);
  }
  if (!saw_header) throw ParseError(1, "missing header");
}

void check_field(std::string_view s) {
  if (s.find_first_of(",\n\r") != std::string_view::npos)
    throw InvalidArgument("field contains a separator: '" + std::string(s) + "'");
}

}  // namespace

std::int64_t Trace::total_bytes(DirectionFilter filter) const {
  std::int64_t total = 0;
  for (const auto& e : events)
    if (matches(filter, e.direction)) total += e.size;
  return total;
}

void validate(const Trace& trace) {
  Micros prev = 0;
  for (const auto& e : trace.events) {
    if (e.size < 1) throw InvalidArgument("event size must be >= 1");
    if (e.timestamp < prev) throw InvalidArgument("event timestamps not monotone");
    if (e.timestamp >= trace.duration) throw InvalidArgument("event timestamp beyond duration");
    prev = e.timestamp;
  }
  Micros label_floor = 0;
  for (const auto& l : trace.labels) {
    if (!(l.start < l.end) || l.end > trace.duration)
      throw InvalidArgument("label outside [0, duration) or empty");
    if (l.start < label_floor) throw InvalidArgument("labels overlap or are unsorted");
    label_floor = l.end;
  }
}

double PeriodGrid::activity_fraction() const {
  if (period_count == 0) return 0;
  const auto flagged = std::count(activity_flags.begin(), activity_flags.end(), true);
  return static_cast<double>(flagged) / static_cast<double>(period_count);
}

std::filesystem::path label_path_for(const std::filesystem::path& trace_path) {
  auto p = trace_path;
  p.replace_extension();
  p += ".labels.csv";
  return p;
}

std::vector<TraceEvent> parse_trace_csv(std::istream& in) {
  std::vector<TraceEvent> events;
  read_rows(in, kTraceHeader, [&](std::string_view line, std::size_t lineno) {
    const auto f = split(line);
    if (f.size() != 5) throw ParseError(lineno, "expected 5 fields");
    TraceEvent e;
    e.timestamp = parse_int(f[0], lineno, "timestamp");
    if (e.timestamp < 0) throw ParseError(lineno, "negative timestamp");
    if (f[1] == "up")
      e.direction = Direction::Up;
    else if (f[1] == "down")
      e.direction = Direction::Down;
    else
      throw ParseError(lineno, "bad direction '" + std::string(f[1]) + "'");
    e.size = parse_int(f[2], lineno, "bytes");
    if (e.size < 1) throw ParseError(lineno, "bytes must be >= 1");
    e.flow_id = std::string(f[3]);
    if (f[4] == "0")
      e.is_cover = false;
    else if (f[4] == "1")
      e.is_cover = true;
    else
      throw ParseError(lineno, "bad is_cover '" + std::string(f[4]) + "'");
    events.push_back(std::move(e));
  });
  return events;
}

std::vector<ActivityLabel> parse_label_csv(std::istream& in) {
  std::vector<ActivityLabel> labels;
  read_rows(in, kLabelHeader, [&](std::string_view line, std::size_t lineno) {
    const auto f = split(line);
    if (f.size() != 3) throw ParseError(lineno, "expected 3 fields");
    ActivityLabel l{parse_int(f[0], lineno, "start"), parse_int(f[1], lineno, "end"), std::string(f[2])};
    if (l.start < 0 || l.start >= l.end) throw ParseError(lineno, "label needs 0 <= start < end");
    labels.push_back(std::move(l));
  });
  return labels;
}

LoadedTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path.string());
  LoadedTrace out;
  out.trace.events = parse_trace_csv(in);

  auto& events = out.trace.events;
  if (!std::is_sorted(events.begin(), events.end(),
                      [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; })) {
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    out.resorted = true;
  }

  const auto lpath = label_path_for(path);
  if (std::filesystem::exists(lpath)) {
    std::ifstream lin(lpath);
    if (!lin) throw Error("cannot open label file " + lpath.string());
    out.trace.labels = parse_label_csv(lin);
  }

  Micros duration = events.empty() ? 0 : events.back().timestamp + 1;
  for (const auto& l : out.trace.labels) duration = std::max(duration, l.end);
  out.trace.duration = duration;
  validate(out.trace);
  return out;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& e : trace.events) {
    check_field(e.flow_id);
    out << e.timestamp << ',' << to_string(e.direction) << ',' << e.size << ',' << e.flow_id << ','
        << (e.is_cover ? '1' : '0') << '\n';
  }
}

void write_label_csv(std::ostream& out, const std::vector<ActivityLabel>& labels) {
  out << kLabelHeader << '\n';
  for (const auto& l : labels) {
    check_field(l.kind);
    out << l.start << ',' << l.end << ',' << l.kind << '\n';
  }
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_trace_csv(out, trace);
  std::ofstream lout(label_path_for(path), std::ios::binary);
  if (!lout) throw Error("cannot write " + label_path_for(path).string());
  write_label_csv(lout, trace.labels);
}

std::vector<std::int64_t> rate_series(const Trace& trace, Micros bin, DirectionFilter filter) {
  if (bin < 1) throw InvalidArgument("bin must be >= 1 us");
  std::vector<std::int64_t> series(static_cast<std::size_t>(ceil_div(trace.duration, bin)), 0);
  for (const auto& e : trace.events) {
    if (!matches(filter, e.direction)) continue;
    const auto i = static_cast<std::size_t>(e.timestamp / bin);
    if (i >= series.size()) series.resize(i + 1, 0);
    series[i] += e.size;
  }
  return series;
}

PeriodGrid segment_periods(const Trace& trace, Micros period_length) {
  if (period_length < 1) throw InvalidArgument("period length T must be >= 1 us");
  PeriodGrid grid;
  grid.period_length = period_length;
  grid.period_count = ceil_div(trace.duration, period_length);
  grid.activity_flags.assign(static_cast<std::size_t>(grid.period_count), false);
  for (const auto& l : trace.labels) {
    const std::int64_t first = l.start / period_length;
    const std::int64_t last = std::min((l.end - 1) / period_length, grid.period_count - 1);
    for (std::int64_t i = first; i <= last; ++i) grid.activity_flags[static_cast<std::size_t>(i)] = true;
  }
  return grid;
}

TraceStats compute_stats(const Trace& trace, const PeriodGrid& grid) {
  TraceStats s;
  const auto per_period = rate_series(trace, grid.period_length, DirectionFilter::Both);

  double act_sum = 0, bg_sum = 0;
  std::int64_t act_n = 0, bg_n = 0;
  for (std::int64_t i = 0; i < grid.period_count; ++i) {
    const double bytes = i < static_cast<std::int64_t>(per_period.size()) ? per_period[i] : 0.0;
    if (grid.activity_flags[static_cast<std::size_t>(i)]) {
      act_sum += bytes;
      ++act_n;
    } else {
      bg_sum += bytes;
      ++bg_n;
    }
  }
  s.mean_activity_undefined = act_n == 0;
  s.mean_activity_bytes = act_n ? act_sum / act_n : 0;
  s.mean_background_undefined = bg_n == 0;
  s.mean_background_bytes = bg_n ? bg_sum / bg_n : 0;
  s.activity_fraction = grid.activity_fraction();

  const auto up = rate_series(trace, kMicrosPerSecond, DirectionFilter::Up);
  const auto down = rate_series(trace, kMicrosPerSecond, DirectionFilter::Down);
  s.peak_rate_up = up.empty() ? 0 : static_cast<double>(*std::max_element(up.begin(), up.end()));
  s.peak_rate_down = down.empty() ? 0 : static_cast<double>(*std::max_element(down.begin(), down.end()));

  // coefficient of variation of the per-activity mean rates
  std::vector<double> rates;
  for (const auto& l : trace.labels) {
    const auto lo = std::lower_bound(trace.events.begin(), trace.events.end(), l.start,
                                     [](const TraceEvent& e, Micros t) { return e.timestamp < t; });
    std::int64_t bytes = 0;
    for (auto it = lo; it != trace.events.end() && it->timestamp < l.end; ++it) bytes += it->size;
    rates.push_back(static_cast<double>(bytes) * kMicrosPerSecond / static_cast<double>(l.end - l.start));
  }
  if (!rates.empty()) {
    double mean = 0;
    for (double r : rates) mean += r;
    mean /= static_cast<double>(rates.size());
    double var = 0;
    for (double r : rates) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rates.size());
    s.activity_rate_stddev_ratio = mean > 0 ? std::sqrt(var) / mean : 0;
  }
  return s;
}

void to_json(nlohmann::json& j, const TraceStats& s) {
  j = nlohmann::json{{"mean_activity_bytes", s.mean_activity_bytes},
                     {"mean_activity_bytes_undefined", s.mean_activity_undefined},
                     {"mean_background_bytes", s.mean_background_bytes},
                     {"mean_background_bytes_undefined", s.mean_background_undefined},
                     {"activity_fraction", s.activity_fraction},
                     {"peak_rate_up", s.peak_rate_up},
                     {"peak_rate_down", s.peak_rate_down},
                     {"activity_rate_stddev_ratio", s.activity_rate_stddev_ratio}};
}

}  // namespace stp
