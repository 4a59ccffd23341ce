#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stp/fixtures.hpp"
#include "stp/metrics.hpp"
#include "support.hpp"

using namespace stp;
using stp::test::sec;

namespace {

AnalyticParams plot_setup(double p, double q) {
  AnalyticParams a;
  a.p = p;
  a.q = q;
  a.rate = 1;
  a.period = sec(1);
  a.d_a = 0.9;
  a.d_not_a = 0;
  return a;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("analytic confidence") {
  CHECK(analytic_confidence(plot_setup(0.1, 1)).value() == 0.1);
  for (double p : {0.001, 0.01, 0.5, 1.0}) CHECK(analytic_confidence(plot_setup(p, 0)).value() == 1.0);
  CHECK(analytic_confidence(plot_setup(0.05, 0.1)).value() == doctest::Approx(0.05 / (0.05 + 0.95 * 0.1)));
  CHECK(analytic_confidence(plot_setup(0, 0.3)).value() == 0.0);
  CHECK_FALSE(analytic_confidence(plot_setup(0, 0)).has_value());
  CHECK_THROWS_AS(analytic_confidence(plot_setup(1.5, 0)), InvalidArgument);

  // expected-count cross-check: n periods, np genuine, n(1-p)q decoys
  const double n = 1e6, p = 0.05, q = 0.1;
  CHECK(analytic_confidence(plot_setup(p, q)).value() == doctest::Approx(n * p / (n * p + n * (1 - p) * q)));
}

TEST_CASE("analytic confidence is monotone") {
  for (double p : {0.01, 0.1, 0.5})
    for (int i = 1; i <= 100; ++i)
      CHECK(analytic_confidence(plot_setup(p, i / 100.0)).value() <
            analytic_confidence(plot_setup(p, (i - 1) / 100.0)).value());
  for (double q : {0.01, 0.5, 1.0})
    for (int i = 1; i < 100; ++i)
      CHECK(analytic_confidence(plot_setup((i + 1) / 100.0, q)).value() >
            analytic_confidence(plot_setup(i / 100.0, q)).value());
}

TEST_CASE("analytic overhead") {
  CHECK(analytic_overhead(plot_setup(1, 0.4)).value() == doctest::Approx(1 / 0.9));
  CHECK(analytic_overhead(plot_setup(0.01, 0)).value() == doctest::Approx(1.1111111));
  CHECK(analytic_overhead(plot_setup(0.01, 1)).value() == doctest::Approx(111.11111));
  CHECK_FALSE(analytic_overhead(plot_setup(0, 0.5)).has_value());

  // affine in q: three points are collinear
  auto a = plot_setup(0.03, 0);
  a.d_not_a = 0.2;
  a.rate = 7;
  auto b_at = [&](double q) {
    a.q = q;
    return analytic_overhead(a).value();
  };
  const double b0 = b_at(0), b1 = b_at(0.37), b2 = b_at(0.9);
  CHECK((b1 - b0) / 0.37 == doctest::Approx((b2 - b0) / 0.9));

  // R T in bytes: 1000 B/s for 10 s
  AnalyticParams bytes;
  bytes.p = 1;
  bytes.rate = 1000;
  bytes.period = sec(10);
  bytes.d_a = 2000;
  CHECK(analytic_overhead(bytes).value() == doctest::Approx(5.0));
}

TEST_CASE("empirical overhead") {
  Trace t;
  t.duration = sec(5);
  t.events = {stp::test::ev(0, Direction::Up, 10)};
  CHECK(empirical_overhead(t, t).value() == 1.0);
  CHECK(empirical_overhead(t, firewall_filter(t)).value() == 0.0);
  CHECK_FALSE(empirical_overhead(Trace{}, t).has_value());
}

TEST_CASE("analytic curve over 101 points") {
  const auto grid = parse_q_grid("0:1:0.01");
  REQUIRE(grid.size() == 101);
  CHECK(grid.back() == 1.0);
  const auto curve = analytic_curve(plot_setup(0.01, 0), grid);
  REQUIRE(curve.size() == 101);
  CHECK(curve.front().confidence == 1.0);
  CHECK(curve.front().overhead == doctest::Approx(1.111).epsilon(0.005));
  CHECK(curve.back().confidence == 0.01);
  CHECK(curve.back().overhead == doctest::Approx(111.1).epsilon(0.005));
  for (const auto& pt : curve) CHECK(pt.confidence_stderr == 0);
}

TEST_CASE("q grid parsing") {
  CHECK(parse_q_grid("0,0.5,1") == std::vector<double>{0, 0.5, 1});
  CHECK(parse_q_grid("0:0.1:0.05").size() == 3);
  CHECK(parse_q_grid("").empty());
  CHECK_THROWS_AS(parse_q_grid("0,x"), InvalidArgument);
  CHECK_THROWS_AS(parse_q_grid("0,2"), InvalidArgument);
  CHECK_THROWS_AS(parse_q_grid("1:0:0.1"), InvalidArgument);
}

TEST_CASE("empirical sweep endpoints") {
  const auto profile = wemo_profile();
  SweepConfig cfg;
  cfg.p = 0.01;
  cfg.q_grid = {0, 1};
  cfg.runs = 4;
  cfg.duration = sec(5000);
  const auto [up, down] = peak_activity_rates(profile);
  cfg.shaping.rate_up = up;
  cfg.shaping.rate_down = down;
  cfg.shaping.period = default_period(profile);
  cfg.base_seed = 17;
  cfg.parallel = 2;
  const auto result = sweep(profile, cfg);
  REQUIRE(result.points.size() == 4);
  CHECK(result.points[0].kind == PointKind::Analytic);
  CHECK(result.points[1].kind == PointKind::Empirical);
  CHECK(result.points[1].confidence == 1.0);
  CHECK(result.points[1].runs == 4);

  // at q = 1 each run's confidence is that run's activity fraction
  double frac = 0;
  for (int j = 0; j < cfg.runs; ++j) {
    const Trace t = generate_trace(profile, {cfg.p, cfg.duration, cfg.decision_tick, mix_seed(17, 1, j)});
    auto sc = cfg.shaping;
    sc.decision = BernoulliDecision{1.0, 0};
    frac += segment_periods(stp_shape(t, sc).trace, cfg.shaping.period).activity_fraction();
  }
  CHECK(std::abs(result.points[3].confidence - frac / cfg.runs) <= 0.02);

  cfg.parallel = 1;
  const auto serial = sweep(profile, cfg);
  std::ostringstream a, b;
  write_sweep_csv(a, result.points);
  write_sweep_csv(b, serial.points);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("q,kind,confidence,confidence_stderr,overhead,overhead_stderr,runs\n", 0) == 0);
}

TEST_CASE("failed points are recorded, not fatal") {
  const auto profile = wemo_profile();
  SweepConfig cfg;
  cfg.p = 0.0;  // no activity: overhead undefined at q = 0
  cfg.q_grid = {0};
  cfg.runs = 2;
  cfg.duration = sec(100);
  cfg.shaping.rate_up = 100;
  cfg.shaping.period = sec(2);
  const auto result = sweep(profile, cfg);
  const auto& emp = result.points.back();
  CHECK(emp.failed);
  CHECK(!emp.error.empty());
  std::ostringstream out;
  write_sweep_csv(out, result.points);
  CHECK(out.str().find("0,empirical,,,,,0\n") != std::string::npos);
}

}  // TEST_SUITE
