#include "stp/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace stp {
namespace {

using Int128 = __int128;

bool by_time(const TraceEvent& a, const TraceEvent& b) { return a.timestamp < b.timestamp; }

/// Lays the constant-rate pattern over slices and emits the cover traffic.
class PatternFiller {
 public:
  PatternFiller(const std::vector<TraceEvent>& real, std::int64_t cover_size, Micros fill_bin)
      : real_(real), cover_size_(cover_size), fill_bin_(fill_bin) {}

  /// Fills [start, end) of a pattern instance whose nominal length is
  /// `nominal` and whose full budget is `budget`. The cumulative target
  /// floor(budget * elapsed / nominal) is split on the absolute fill_bin grid
  /// so that back-to-back slices look like one constant-rate stream.
  void fill(Micros start, Micros end, Micros nominal, std::int64_t budget, Direction dir) {
    auto target_at = [&](Micros x) {
      return static_cast<std::int64_t>(static_cast<Int128>(budget) * (x - start) / nominal);
    };

    bounds_.clear();
    bounds_.push_back(start);
    for (Micros g = (start / fill_bin_ + 1) * fill_bin_; g < end; g += fill_bin_) bounds_.push_back(g);
    bounds_.push_back(end);
    const std::size_t pieces = bounds_.size() - 1;

    real_bytes_.assign(pieces, 0);
    std::int64_t real_total = 0;
    auto it = std::lower_bound(real_.begin(), real_.end(), start,
                               [](const TraceEvent& e, Micros t) { return e.timestamp < t; });
    for (; it != real_.end() && it->timestamp < end; ++it) {
      if (it->direction != dir) continue;
      const auto piece = static_cast<std::size_t>(
          std::upper_bound(bounds_.begin(), bounds_.end(), it->timestamp) - bounds_.begin() - 1);
      real_bytes_[piece] += it->size;
      real_total += it->size;
    }

    const std::int64_t slice_budget = target_at(end);
    if (real_total > slice_budget) {
      overflow.push_back(OverflowSlice{start, end, dir, real_total, slice_budget});
      return;
    }

    // Water-fill the cover into per-piece deficits so the slice total is exact
    // and the per-piece rate stays as flat as the real traffic allows.
    deficit_.resize(pieces);
    std::int64_t max_deficit = 0;
    for (std::size_t i = 0; i < pieces; ++i) {
      const std::int64_t target = target_at(bounds_[i + 1]) - target_at(bounds_[i]);
      deficit_[i] = std::max<std::int64_t>(0, target - real_bytes_[i]);
      max_deficit = std::max(max_deficit, deficit_[i]);
    }
    const std::int64_t cover_total = slice_budget - real_total;
    auto filled = [&](std::int64_t level) {
      std::int64_t s = 0;
      for (auto d : deficit_) s += std::min(d, level);
      return s;
    };
    std::int64_t lo = 0, hi = max_deficit;
    while (lo < hi) {
      const std::int64_t mid = lo + (hi - lo + 1) / 2;
      if (filled(mid) <= cover_total)
        lo = mid;
      else
        hi = mid - 1;
    }
    std::int64_t remainder = cover_total - filled(lo);
    for (std::size_t i = 0; i < pieces; ++i) {
      std::int64_t bytes = std::min(deficit_[i], lo);
      if (remainder > 0 && deficit_[i] > lo) {
        ++bytes;
        --remainder;
      }
      emit(bounds_[i], bounds_[i + 1], bytes, dir);
    }
  }

  std::vector<TraceEvent> cover;
  std::vector<OverflowSlice> overflow;

 private:
  void emit(Micros a, Micros b, std::int64_t bytes, Direction dir) {
    if (bytes <= 0) return;
    const std::int64_t count = ceil_div(bytes, cover_size_);
    for (std::int64_t j = 0; j < count; ++j) {
      const std::int64_t size = j + 1 < count ? cover_size_ : bytes - (count - 1) * cover_size_;
      cover.push_back(TraceEvent{a + static_cast<Micros>(static_cast<Int128>(j) * (b - a) / count), dir, size,
                                 std::string(kCoverFlowId), true});
    }
  }

  const std::vector<TraceEvent>& real_;
  std::int64_t cover_size_;
  Micros fill_bin_;
  std::vector<Micros> bounds_;
  std::vector<std::int64_t> real_bytes_;
  std::vector<std::int64_t> deficit_;
};

std::vector<TraceEvent> merge_events(const std::vector<TraceEvent>& real, std::vector<TraceEvent> cover) {
  std::vector<TraceEvent> out;
  out.reserve(real.size() + cover.size());
  out.insert(out.end(), real.begin(), real.end());
  out.insert(out.end(), std::make_move_iterator(cover.begin()), std::make_move_iterator(cover.end()));
  std::stable_sort(out.begin(), out.end(), by_time);
  return out;
}

void mark_genuine(PaddingSchedule& schedule, const std::vector<Interval>& activity, Micros nominal, Micros horizon) {
  std::size_t ai = 0;
  for (auto& inst : schedule.instances) {
    const Interval slice{inst.start, std::min(inst.start + nominal, horizon)};
    while (ai < activity.size() && activity[ai].end <= slice.start) ++ai;
    inst.genuine = false;
    for (std::size_t j = ai; j < activity.size() && activity[j].start < slice.end; ++j)
      if (activity[j].overlaps(slice)) {
        inst.genuine = true;
        break;
      }
  }
}

void build_spans(PaddingSchedule& schedule, Micros nominal, Micros horizon) {
  schedule.spans.clear();
  for (const auto& inst : schedule.instances) {
    const Micros end = std::min(inst.start + nominal, horizon);
    if (!schedule.spans.empty() && schedule.spans.back().end == inst.start) {
      schedule.spans.back().end = end;
      schedule.spans.back().genuine |= inst.genuine;
    } else {
      schedule.spans.push_back(PaddedSpan{inst.start, end, inst.genuine});
    }
  }
}

std::vector<Interval> label_intervals(const Trace& trace) {
  std::vector<Interval> out;
  out.reserve(trace.labels.size());
  for (const auto& l : trace.labels) out.push_back(Interval{l.start, l.end});
  return out;
}

}  // namespace

std::int64_t ShapingConfig::budget(Direction d) const {
  const double rate = d == Direction::Up ? rate_up : rate_down;
  return static_cast<std::int64_t>(std::llround(rate * static_cast<double>(period) / kMicrosPerSecond));
}

void ShapingConfig::validate() const {
  if (rate_up < 0 || rate_down < 0 || !(rate_up + rate_down > 0))
    throw InvalidArgument("padding rates must be >= 0 with R_u + R_d > 0");
  if (period < 1) throw InvalidArgument("period T must be >= 1 us");
  if (cover_packet_size < 1) throw InvalidArgument("cover packet size must be >= 1");
  if (fill_bin < 1) throw InvalidArgument("fill bin must be >= 1 us");
  if (detector) detector->validate();
}

ShapedResult stp_shape(const Trace& trace, const ShapingConfig& config) {
  config.validate();
  const Micros period = config.period;
  const std::vector<Interval> activity =
      config.detector ? detect_activities(trace, *config.detector) : label_intervals(trace);

  DecisionFunction decision(config.decision);
  Rng offsets(config.seed);
  std::vector<Micros> starts;

  std::size_t ai = 0;
  Micros cursor = activity.empty() ? 0 : activity.front().start;
  const std::int64_t periods = ceil_div(trace.duration, period);

  for (std::int64_t k = 0; k < periods; ++k) {
    const Micros boundary = k * period;
    if (decision.decide(k)) {
      const Micros start = boundary + static_cast<Micros>(offsets.below(static_cast<std::uint64_t>(period)));
      if (!starts.empty() && start <= starts.back() + period)
        starts.push_back(starts.back() + period);  // repeat the pattern once the current one ends
      else
        starts.push_back(start);
    }

    // activity checks due in this period, in time order
    while (ai < activity.size() && cursor < boundary + period) {
      Micros covered_until = -1;
      for (std::size_t back = 0; back < std::min<std::size_t>(2, starts.size()); ++back) {
        const Micros s = starts[starts.size() - 1 - back];
        if (s <= cursor && cursor < s + period) covered_until = s + period;
      }
      if (covered_until < 0) {
        if (!starts.empty() && starts.back() > cursor) starts.pop_back();  // drop the pending decoy
        starts.push_back(cursor);
        covered_until = cursor + period;
      }
      if (covered_until >= activity[ai].end) {
        if (++ai < activity.size()) cursor = activity[ai].start;
      } else {
        cursor = covered_until;
      }
    }
  }

  ShapedResult out;
  out.schedule.period_length = period;
  for (Micros s : starts) out.schedule.instances.push_back(PatternInstance{s, false});
  const Micros horizon = starts.empty() ? trace.duration : std::max(trace.duration, starts.back() + period);
  mark_genuine(out.schedule, activity, period, horizon);
  build_spans(out.schedule, period, horizon);

  PatternFiller filler(trace.events, config.cover_packet_size, config.fill_bin);
  const auto budget_up = config.budget(Direction::Up);
  const auto budget_down = config.budget(Direction::Down);
  for (Micros s : starts) {
    filler.fill(s, s + period, period, budget_up, Direction::Up);
    filler.fill(s, s + period, period, budget_down, Direction::Down);
  }

  out.trace.duration = horizon;
  out.trace.labels = trace.labels;
  out.trace.events = merge_events(trace.events, std::move(filler.cover));
  out.overflow = std::move(filler.overflow);
  return out;
}

ShapedResult ilp_shape(const Trace& trace, double rate_up, double rate_down, std::int64_t cover_packet_size,
                       Micros period) {
  if (!(rate_up > 0) || !(rate_down > 0)) throw InvalidArgument("ILP rates must be > 0");
  if (period < 1) throw InvalidArgument("ILP slice length must be >= 1 us");
  if (cover_packet_size < 1) throw InvalidArgument("cover packet size must be >= 1");

  ShapingConfig rates;
  rates.rate_up = rate_up;
  rates.rate_down = rate_down;
  rates.period = period;

  ShapedResult out;
  out.schedule.period_length = period;
  PatternFiller filler(trace.events, cover_packet_size, period);
  for (Micros s = 0; s < trace.duration; s += period) {
    const Micros e = std::min(s + period, trace.duration);
    out.schedule.instances.push_back(PatternInstance{s, false});
    filler.fill(s, e, period, rates.budget(Direction::Up), Direction::Up);
    filler.fill(s, e, period, rates.budget(Direction::Down), Direction::Down);
  }
  mark_genuine(out.schedule, label_intervals(trace), period, trace.duration);
  build_spans(out.schedule, period, trace.duration);

  out.trace.duration = trace.duration;
  out.trace.labels = trace.labels;
  out.trace.events = merge_events(trace.events, std::move(filler.cover));
  out.overflow = std::move(filler.overflow);
  return out;
}

Trace firewall_filter(const Trace& trace) { return Trace{{}, trace.duration, trace.labels}; }

Trace vpn_aggregate(std::span<const NamedTrace> traces, std::int64_t encapsulation_bytes) {
  if (traces.empty()) throw InvalidArgument("vpn_aggregate needs at least one trace");
  if (encapsulation_bytes < 0) throw InvalidArgument("encapsulation overhead must be >= 0");
  Trace out;
  std::vector<ActivityLabel> labels;
  for (const auto& [device, t] : traces) {
    out.duration = std::max(out.duration, t.duration);
    for (const auto& e : t.events)
      out.events.push_back(TraceEvent{e.timestamp, e.direction, e.size + encapsulation_bytes,
                                      std::string(kTunnelFlowId), e.is_cover});
    for (const auto& l : t.labels) labels.push_back(ActivityLabel{l.start, l.end, device + ":" + l.kind});
  }
  std::stable_sort(out.events.begin(), out.events.end(), by_time);
  std::stable_sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (auto& l : labels) {
    if (!out.labels.empty() && l.start < out.labels.back().end) {
      out.labels.back().end = std::max(out.labels.back().end, l.end);
      out.labels.back().kind += "|" + l.kind;
    } else {
      out.labels.push_back(std::move(l));
    }
  }
  return out;
}

TokenBucketLog token_bucket_pad(std::span<const DevicePacket> packets, double rate, std::int64_t cover_size,
                                Micros duration) {
  if (!(rate > 0)) throw InvalidArgument("token rate must be > 0");
  if (cover_size < 1) throw InvalidArgument("cover packet size must be >= 1");

  std::vector<std::size_t> order(packets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return packets[a].arrival < packets[b].arrival; });

  const long double spacing = static_cast<long double>(cover_size) * kMicrosPerSecond / rate;
  TokenBucketLog log;
  std::size_t next = 0;        // next queued packet in arrival order
  int fragments_left = 0;      // of the packet at order[next - 1]
  int fragment_count = 0;
  std::int64_t remaining = 0;  // bytes of that packet not yet sent

  for (std::int64_t k = 0;; ++k) {
    const auto t = static_cast<Micros>(std::ceil(static_cast<long double>(k) * spacing));
    if (t >= duration) break;
    if (fragments_left == 0 && next < order.size() && packets[order[next]].arrival <= t) {
      const auto& pkt = packets[order[next]];
      if (pkt.size < 1) throw InvalidArgument("device packet size must be >= 1");
      remaining = pkt.size;
      fragment_count = static_cast<int>(ceil_div(pkt.size, cover_size));
      fragments_left = fragment_count;
      ++next;
    }
    if (fragments_left > 0) {
      const std::int64_t size = std::min(remaining, cover_size);
      log.sends.push_back(SendRecord{t, size, false, static_cast<std::int64_t>(order[next - 1]),
                                     fragment_count - fragments_left, fragment_count});
      remaining -= size;
      --fragments_left;
    } else {
      log.sends.push_back(SendRecord{t, cover_size, true, -1, 0, 1});
    }
  }
  log.unsent_packets = static_cast<std::int64_t>(order.size() - next) + (fragments_left > 0 ? 1 : 0);
  return log;
}

void write_schedule_csv(std::ostream& out, const PaddingSchedule& schedule) {
  out << "start_us,end_us,genuine\n";
  // one row per pattern instance; contiguous rows form one padded span
  std::size_t si = 0;
  for (const auto& inst : schedule.instances) {
    while (si < schedule.spans.size() && schedule.spans[si].end <= inst.start) ++si;
    Micros end = inst.start + schedule.period_length;
    if (si < schedule.spans.size()) end = std::min(end, schedule.spans[si].end);
    out << inst.start << ',' << end << ',' << (inst.genuine ? 1 : 0) << '\n';
  }
}

PaddingSchedule read_schedule_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || (line != "start_us,end_us,genuine" && line != "start_us,end_us,genuine\r"))
    throw ParseError(1, "expected header 'start_us,end_us,genuine'");
  PaddingSchedule schedule;
  Micros horizon = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    long long start = 0, end = 0;
    int genuine = 0;
    char c1 = 0, c2 = 0;
    std::istringstream row(line);
    if (!(row >> start >> c1 >> end >> c2 >> genuine) || c1 != ',' || c2 != ',' || !(row >> std::ws).eof() ||
        start < 0 || end <= start || (genuine != 0 && genuine != 1))
      throw ParseError(lineno, "bad schedule row '" + line + "'");
    if (!schedule.instances.empty() && start < horizon) throw ParseError(lineno, "schedule rows overlap");
    schedule.period_length = std::max(schedule.period_length, static_cast<Micros>(end - start));
    schedule.instances.push_back(PatternInstance{start, genuine == 1});
    if (!schedule.spans.empty() && schedule.spans.back().end == start) {
      schedule.spans.back().end = end;
      schedule.spans.back().genuine |= genuine == 1;
    } else {
      schedule.spans.push_back(PaddedSpan{start, end, genuine == 1});
    }
    horizon = end;
  }
  return schedule;
}

nlohmann::json overflow_report(const ShapedResult& result) {
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& o : result.overflow)
    slices.push_back({{"start_us", o.start},
                      {"end_us", o.end},
                      {"direction", to_string(o.direction)},
                      {"real_bytes", o.real_bytes},
                      {"budget", o.budget}});
  return {{"overflow_count", result.overflow.size()}, {"slices", std::move(slices)}};
}

}  // namespace stp
