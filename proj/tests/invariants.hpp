#pragma once

#include <string>
#include <vector>

#include "stp/shaping.hpp"

namespace stp::test {

/// Checks every structural property of an STP result against its input.
/// Returns one message per violation.
inline std::vector<std::string> shaping_violations(const Trace& input, const ShapingConfig& cfg,
                                                   const ShapedResult& out) {
  std::vector<std::string> bad;
  const Micros T = cfg.period;
  const auto& inst = out.schedule.instances;

  for (const auto& s : out.schedule.spans)
    if (s.end <= s.start || (s.end - s.start) % T != 0)
      bad.push_back("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) + ") not a multiple of T");
  for (std::size_t i = 1; i < inst.size(); ++i) {
    if (inst[i].start - inst[i - 1].start < T) bad.push_back("overlapping pattern instances");
    if (inst[i].start / T == inst[i - 1].start / T) bad.push_back("two pattern starts in one period");
  }

  std::vector<TraceEvent> real;
  for (const auto& e : out.trace.events)
    if (!e.is_cover) real.push_back(e);
  if (real != input.events) bad.push_back("input events not preserved verbatim");

  if (!cfg.detector) {
    for (const auto& l : input.labels) {
      // walk genuine instances from the label start
      Micros at = l.start;
      for (const auto& p : inst)
        if (p.genuine && p.start <= at && at < p.start + T) at = p.start + T;
      if (at < l.end) bad.push_back("label at " + std::to_string(l.start) + " not inside genuine padding");
    }
  }

  for (const auto& p : inst)
    for (auto dir : {Direction::Up, Direction::Down}) {
      const bool overflowed = std::any_of(out.overflow.begin(), out.overflow.end(), [&](const OverflowSlice& o) {
        return o.start == p.start && o.direction == dir;
      });
      if (overflowed) continue;
      std::int64_t bytes = 0;
      for (const auto& e : out.trace.events)
        if (e.direction == dir && e.timestamp >= p.start && e.timestamp < p.start + T) bytes += e.size;
      if (bytes != cfg.budget(dir))
        bad.push_back("slice at " + std::to_string(p.start) + " carries " + std::to_string(bytes) + " bytes, budget " +
                      std::to_string(cfg.budget(dir)));
    }
  return bad;
}

}  // namespace stp::test
