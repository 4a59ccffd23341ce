#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stp/generator.hpp"
#include "stp/shaping.hpp"

namespace stp {

/// Inputs of the closed-form confidence and overhead expressions.
/// R * T is evaluated in bytes: rate is bytes/s and period is microseconds,
/// so rate = 1, period = 1 s reproduces the normalized "RT = 1" setup.
struct AnalyticParams {
  double p = 0;
  double q = 0;
  double rate = 0;  ///< R = R_u + R_d, bytes/s
  Micros period = kMicrosPerSecond;
  double d_a = 0;      ///< mean bytes in an activity period
  double d_not_a = 0;  ///< mean bytes in a background period

  double pattern_bytes() const { return rate * static_cast<double>(period) / kMicrosPerSecond; }
  void validate() const;
};

/// c = p / (p + (1 - p) q). Exactly 1 at q = 0 (p > 0), exactly p at q = 1,
/// 0 when p = 0 < q, nullopt when p = q = 0.
std::optional<double> analytic_confidence(const AnalyticParams& params);

/// b = (pRT + (1-p)qRT + (1-p)(1-q)D_notA) / (pD_A + (1-p)D_notA); nullopt
/// when the denominator is 0.
std::optional<double> analytic_overhead(const AnalyticParams& params);

/// Shaped bytes / original bytes; nullopt when the original has no bytes.
std::optional<double> empirical_overhead(const Trace& original, const Trace& shaped);

enum class PointKind { Analytic, Empirical };

struct TradeoffPoint {
  double q = 0;
  double confidence = 0;
  double overhead = 0;
  PointKind kind = PointKind::Analytic;
  int runs = 0;
  double confidence_stderr = 0;
  double overhead_stderr = 0;
  bool failed = false;
  std::string error;
};

struct SweepConfig {
  double p = 0.01;
  std::vector<double> q_grid;
  int runs = 50;
  Micros duration = 10'000 * kMicrosPerSecond;
  Micros decision_tick = kMicrosPerSecond;
  /// Rates, period, detector, and cover size; decision and seed are replaced
  /// per run.
  ShapingConfig shaping;
  std::uint64_t base_seed = 0;
  int parallel = 1;
};

struct SweepResult {
  std::vector<TradeoffPoint> points;  ///< sorted by q, analytic before empirical
  AnalyticParams fitted;              ///< q field unused
};

/// Maps the generator's per-tick p onto a T-period and fills R, T, D_A and
/// D_notA from the profile and shaping config.
AnalyticParams fit_analytic_params(const DeviceProfile& profile, const SweepConfig& config);

/// Closed-form curve over q_grid.
std::vector<TradeoffPoint> analytic_curve(const AnalyticParams& base, const std::vector<double>& q_grid);

/// Generate -> STP -> score, `runs` times per q. Point i run j is seeded with
/// mix_seed(base_seed, i, j). Also emits the analytic curve.
SweepResult sweep(const DeviceProfile& profile, const SweepConfig& config);

/// Parses "0,0.1,0.5" or "start:stop:step" (inclusive of stop).
std::vector<double> parse_q_grid(std::string_view text);

void write_sweep_csv(std::ostream& out, const std::vector<TradeoffPoint>& points);
nlohmann::json sweep_json(const SweepResult& result);
void to_json(nlohmann::json& j, const AnalyticParams& a);

}  // namespace stp
