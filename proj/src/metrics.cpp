#include "stp/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "stp/adversary.hpp"
#include "stp/rng.hpp"

namespace stp {

void AnalyticParams::validate() const {
  if (!(p >= 0 && p <= 1) || !(q >= 0 && q <= 1)) throw InvalidArgument("p and q must be in [0, 1]");
  if (rate < 0 || period < 0 || d_a < 0 || d_not_a < 0) throw InvalidArgument("analytic parameters must be >= 0");
}

std::optional<double> analytic_confidence(const AnalyticParams& a) {
  a.validate();
  if (a.p == 0) return a.q > 0 ? std::optional<double>(0.0) : std::nullopt;
  if (a.q == 0) return 1.0;
  if (a.q == 1) return a.p;
  return a.p / (a.p + (1 - a.p) * a.q);
}

std::optional<double> analytic_overhead(const AnalyticParams& a) {
  a.validate();
  const double denom = a.p * a.d_a + (1 - a.p) * a.d_not_a;
  if (!(denom > 0)) return std::nullopt;
  const double rt = a.pattern_bytes();
  return (a.p * rt + (1 - a.p) * a.q * rt + (1 - a.p) * (1 - a.q) * a.d_not_a) / denom;
}

std::optional<double> empirical_overhead(const Trace& original, const Trace& shaped) {
  const auto base = original.total_bytes();
  if (base == 0) return std::nullopt;
  return static_cast<double>(shaped.total_bytes()) / static_cast<double>(base);
}

AnalyticParams fit_analytic_params(const DeviceProfile& profile, const SweepConfig& config) {
  profile.validate();
  AnalyticParams a;
  const double ticks_per_period =
      static_cast<double>(config.shaping.period) / static_cast<double>(config.decision_tick);
  a.p = 1 - std::pow(1 - config.p, ticks_per_period);
  a.rate = config.shaping.rate();
  a.period = config.shaping.period;

  double bytes = 0, dur = 0;
  for (const auto& s : profile.segments) {
    bytes += static_cast<double>(s.bytes());
    dur += static_cast<double>(s.duration);
  }
  const auto n = static_cast<double>(profile.segments.size());
  const double bg_rate = profile.background_rate_up + profile.background_rate_down;
  const double t = static_cast<double>(a.period);
  a.d_a = bytes / n + bg_rate * std::max(0.0, t - dur / n) / kMicrosPerSecond;
  a.d_not_a = bg_rate * t / kMicrosPerSecond;
  return a;
}

std::vector<TradeoffPoint> analytic_curve(const AnalyticParams& base, const std::vector<double>& q_grid) {
  std::vector<TradeoffPoint> out;
  for (double q : q_grid) {
    AnalyticParams a = base;
    a.q = q;
    TradeoffPoint pt;
    pt.q = q;
    pt.kind = PointKind::Analytic;
    const auto c = analytic_confidence(a);
    const auto b = analytic_overhead(a);
    if (c && b) {
      pt.confidence = *c;
      pt.overhead = *b;
    } else {
      pt.failed = true;
      pt.error = c ? "overhead undefined" : "confidence undefined";
    }
    out.push_back(std::move(pt));
  }
  return out;
}

namespace {

struct MeanStderr {
  double mean = 0;
  double stderr_ = 0;
  int n = 0;
};

MeanStderr summarize(const std::vector<double>& xs) {
  MeanStderr s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double var = 0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    var /= static_cast<double>(xs.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return s;
}

TradeoffPoint run_point(const DeviceProfile& profile, const SweepConfig& config, std::size_t index) {
  const double q = config.q_grid[index];
  TradeoffPoint pt;
  pt.q = q;
  pt.kind = PointKind::Empirical;
  try {
    if (!(q >= 0 && q <= 1)) throw InvalidArgument("q must be in [0, 1]");
    std::vector<double> confidences, overheads;
    for (int j = 0; j < config.runs; ++j) {
      const std::uint64_t seed = mix_seed(config.base_seed, index, static_cast<std::uint64_t>(j));
      GeneratorConfig gen{config.p, config.duration, config.decision_tick, seed};
      const Trace trace = generate_trace(profile, gen);

      ShapingConfig shaping = config.shaping;
      shaping.decision = BernoulliDecision{q, mix_seed(seed, 1, 0)};
      shaping.seed = mix_seed(seed, 2, 0);
      const ShapedResult shaped = stp_shape(trace, shaping);

      if (const auto c = evaluate_period_confidence(shaped.schedule)) confidences.push_back(*c);
      if (const auto b = empirical_overhead(trace, shaped.trace)) overheads.push_back(*b);
    }
    if (confidences.empty() || overheads.empty())
      throw Error("no run produced a defined confidence and overhead");
    const auto c = summarize(confidences);
    const auto b = summarize(overheads);
    pt.confidence = c.mean;
    pt.confidence_stderr = c.stderr_;
    pt.overhead = b.mean;
    pt.overhead_stderr = b.stderr_;
    pt.runs = std::min(c.n, b.n);
  } catch (const std::exception& e) {
    pt.failed = true;
    pt.error = e.what();
  }
  return pt;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

SweepResult sweep(const DeviceProfile& profile, const SweepConfig& config) {
  if (config.runs < 1) throw InvalidArgument("runs must be >= 1");
  if (config.q_grid.empty()) throw InvalidArgument("q grid is empty");
  profile.validate();
  config.shaping.validate();

  SweepResult result;
  result.fitted = fit_analytic_params(profile, config);

  std::vector<TradeoffPoint> empirical(config.q_grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.q_grid.size(); i = next++) empirical[i] = run_point(profile, config, i);
  };
  const int threads = std::clamp(config.parallel, 1, static_cast<int>(config.q_grid.size()));
  std::vector<std::jthread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  result.points = analytic_curve(result.fitted, config.q_grid);
  result.points.insert(result.points.end(), empirical.begin(), empirical.end());
  std::stable_sort(result.points.begin(), result.points.end(), [](const auto& a, const auto& b) {
    return a.q != b.q ? a.q < b.q : (a.kind == PointKind::Analytic && b.kind == PointKind::Empirical);
  });
  return result;
}

std::vector<double> parse_q_grid(std::string_view text) {
  auto number = [&](std::string_view s) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
      throw InvalidArgument("bad q grid value '" + std::string(s) + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw InvalidArgument("range grid needs start:stop:step");
    const double start = number(text.substr(0, a));
    const double stop = number(text.substr(a + 1, b - a - 1));
    const double step = number(text.substr(b + 1));
    if (!(step > 0) || stop < start) throw InvalidArgument("bad q grid range");
    const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::int64_t i = 0; i < count; ++i) out.push_back(std::min(stop, start + static_cast<double>(i) * step));
  } else {
    std::size_t pos = 0;
    while (pos <= text.size() && !text.empty()) {
      const auto comma = text.find(',', pos);
      out.push_back(number(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  for (double q : out)
    if (!(q >= 0 && q <= 1)) throw InvalidArgument("q values must be in [0, 1]");
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<TradeoffPoint>& points) {
  out << "q,kind,confidence,confidence_stderr,overhead,overhead_stderr,runs\n";
  for (const auto& pt : points) {
    out << format_number(pt.q) << ',' << (pt.kind == PointKind::Analytic ? "analytic" : "empirical") << ',';
    if (pt.failed)
      out << ",,,," << 0 << '\n';
    else
      out << format_number(pt.confidence) << ',' << format_number(pt.confidence_stderr) << ','
          << format_number(pt.overhead) << ',' << format_number(pt.overhead_stderr) << ',' << pt.runs << '\n';
  }
}

void to_json(nlohmann::json& j, const AnalyticParams& a) {
  j = nlohmann::json{{"p", a.p},       {"rate", a.rate}, {"period_us", a.period}, {"rt_bytes", a.pattern_bytes()},
                     {"d_a", a.d_a},   {"d_not_a", a.d_not_a}};
}

nlohmann::json sweep_json(const SweepResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : result.points) {
    nlohmann::json jp{{"q", pt.q},
                      {"kind", pt.kind == PointKind::Analytic ? "analytic" : "empirical"},
                      {"runs", pt.runs},
                      {"failed", pt.failed}};
    if (pt.failed) {
      jp["error"] = pt.error;
    } else {
      jp["confidence"] = pt.confidence;
      jp["confidence_stderr"] = pt.confidence_stderr;
      jp["overhead"] = pt.overhead;
      jp["overhead_stderr"] = pt.overhead_stderr;
    }
    points.push_back(std::move(jp));
  }
  return {{"fitted_params", result.fitted}, {"points", std::move(points)}};
}

}  // namespace stp
