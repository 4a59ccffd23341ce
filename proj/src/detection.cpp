#include "stp/detection.hpp"

#include <algorithm>
#include <cmath>

namespace stp {

void ThresholdDetector::validate() const {
  if (bin < 1) throw InvalidArgument("detector bin must be >= 1 us");
  if (!(k > 0)) throw InvalidArgument("detector k must be > 0");
  if (min_quiet_gap < 0) throw InvalidArgument("detector min_quiet_gap must be >= 0");
}

std::vector<Interval> detect_activities(const Trace& trace, const ThresholdDetector& det) {
  det.validate();
  const auto series = rate_series(trace, det.bin, DirectionFilter::Both);
  std::vector<Interval> out;
  if (series.empty()) return out;

  const auto n = static_cast<double>(series.size());
  double mean = 0;
  for (auto v : series) mean += static_cast<double>(v);
  mean /= n;
  double var = 0;
  for (auto v : series) var += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0) return out;

  const double threshold = mean + det.k * sd;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(static_cast<double>(series[i]) > threshold)) continue;
    const Interval bin{static_cast<Micros>(i) * det.bin, std::min(static_cast<Micros>(i + 1) * det.bin, trace.duration)};
    if (!out.empty() && bin.start - out.back().end <= det.min_quiet_gap)
      out.back().end = bin.end;
    else
      out.push_back(bin);
  }
  return out;
}

}  // namespace stp
