// Acceptance checks. One line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "invariants.hpp"
#include "stp/adversary.hpp"
#include "stp/fixtures.hpp"
#include "stp/metrics.hpp"
#include "stp/rng.hpp"
#include "support.hpp"

using namespace stp;
using stp::test::sec;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kEndpointRelTol = 0.005;
constexpr double kConfidenceAbsTol = 0.02;
constexpr double kOverheadRelTol = 0.05;
constexpr double kSlope = -2.0;
constexpr double kSlopeTol = 0.3;
constexpr double kGoldenOverheadLow = 6.8 * 0.5;
constexpr double kGoldenOverheadHigh = 6.8 * 1.5;
constexpr double kGoldenPinTol = 1e-9;

// Frozen Wemo fixture: first seed in 1, 2, ... giving 6 spans with 2 genuine.
constexpr std::uint64_t kGoldenSeed = 38;
constexpr double kGoldenOverhead = 5.771643664;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool rel_close(double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); }

ShapingConfig profile_config(const DeviceProfile& profile, double q, std::uint64_t seed) {
  const auto [up, down] = peak_activity_rates(profile);
  ShapingConfig c;
  c.rate_up = up;
  c.rate_down = down;
  c.period = default_period(profile);
  c.decision = BernoulliDecision{q, mix_seed(seed, 1, 0)};
  c.seed = mix_seed(seed, 2, 0);
  return c;
}

Outcome confidence_endpoints() {
  bool ok = true;
  for (double p : {1e-6, 0.001, 0.01, 0.05, 0.1, 0.3333, 0.5, 0.9, 1.0}) {
    AnalyticParams a;
    a.p = p;
    a.q = 0;
    ok &= analytic_confidence(a) == 1.0;
    a.q = 1;
    ok &= analytic_confidence(a) == p;
  }
  return {ok, "c(q=0) == 1 and c(q=1) == p for 9 values of p"};
}

Outcome analytic_tradeoff() {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  AnalyticParams base;
  base.rate = 1;
  base.period = kMicrosPerSecond;
  base.d_a = 0.9;
  base.d_not_a = 0;
  bool ok = true;
  std::vector<TradeoffPoint> low;
  for (double p : {0.01, 0.1}) {
    base.p = p;
    const auto curve = analytic_curve(base, grid);
    ok &= curve.size() == 101;
    for (const auto& pt : curve) ok &= !pt.failed;
    if (p == 0.01) low = curve;
  }
  // b = (p + (1-p)q) / (0.9 p), c = p / (p + (1-p)q)
  const double b0 = 0.01 / (0.9 * 0.01), c0 = 1.0;
  const double b1 = 1.0 / (0.9 * 0.01), c1 = 0.01;
  ok &= rel_close(low.front().overhead, b0, kEndpointRelTol) && rel_close(low.front().confidence, c0, kEndpointRelTol);
  ok &= rel_close(low.back().overhead, b1, kEndpointRelTol) && rel_close(low.back().confidence, c1, kEndpointRelTol);
  ok &= rel_close(low.front().overhead, 1.111, kEndpointRelTol) && rel_close(low.back().overhead, 111.1, kEndpointRelTol);
  return {ok, fmt("p=0.01: (b, c) = (%.4f, %.4f) .. (%.2f, %.4f), 101 points per curve", low.front().overhead,
                  low.front().confidence, low.back().overhead, low.back().confidence)};
}

Outcome analytic_empirical_convergence() {
  const auto profile = wemo_profile();
  const std::uint64_t seed = 2024;
  auto cfg = profile_config(profile, 0.1, seed);
  const Micros T = cfg.period;
  const Trace trace = generate_trace(profile, {0.05, 100'000 * T, T, seed});
  const auto shaped = stp_shape(trace, cfg);
  const double c = evaluate_period_confidence(shaped.schedule).value();
  const double b = empirical_overhead(trace, shaped.trace).value();

  SweepConfig sc;
  sc.p = 0.05;
  sc.decision_tick = T;
  sc.shaping = cfg;
  AnalyticParams a = fit_analytic_params(profile, sc);
  a.q = 0.1;
  a.d_not_a = 0;
  const double b_pred = analytic_overhead(a).value();
  const bool ok = std::abs(c - 0.3448) <= kConfidenceAbsTol && rel_close(b, b_pred, kOverheadRelTol);
  return {ok, fmt("c = %.4f (want 0.3448 +- %.2f), b = %.3f vs predicted %.3f", c, kConfidenceAbsTol, b, b_pred)};
}

Outcome power_law() {
  const auto profile = wemo_profile();
  SweepConfig sc;
  sc.p = 0.01;
  sc.runs = 50;
  sc.shaping = profile_config(profile, 0, 0);
  sc.decision_tick = sc.shaping.period;
  sc.duration = 10'000 * sc.shaping.period;
  sc.base_seed = 99;
  sc.parallel = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (int i = 1; i <= 10; ++i) sc.q_grid.push_back(0.05 * i);
  const auto result = sweep(profile, sc);

  std::vector<double> xs, ys;
  for (const auto& pt : result.points)
    if (pt.kind == PointKind::Empirical && !pt.failed) {
      xs.push_back(std::log(pt.q));
      ys.push_back(std::log(pt.confidence / pt.overhead));
    }
  if (xs.size() != 10) return {false, "empirical sweep points failed"};
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= xs.size(), my /= ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  const double slope = sxy / sxx;
  return {std::abs(slope - kSlope) <= kSlopeTol, fmt("slope of log(c/b) vs log q = %.3f (want %.1f +- %.1f)", slope, kSlope, kSlopeTol)};
}

Outcome golden_fixture() {
  const auto profile = wemo_profile();
  const Trace trace = generate_trace(profile, {0.001, sec(1000), sec(1), kGoldenSeed});
  const auto shaped = stp_shape(trace, profile_config(profile, 0.01, kGoldenSeed));
  const auto& spans = shaped.schedule.spans;
  const auto genuine = std::count_if(spans.begin(), spans.end(), [](const PaddedSpan& s) { return s.genuine; });
  const auto c = evaluate_confidence(shaped.schedule);
  const double b = empirical_overhead(trace, shaped.trace).value_or(0);
  const bool ok = spans.size() == 6 && genuine == 2 && c && *c == 2.0 / 6.0 && b >= kGoldenOverheadLow &&
                  b <= kGoldenOverheadHigh && rel_close(b, kGoldenOverhead, kGoldenPinTol);
  return {ok, fmt("seed %llu: %zu spans, %td genuine, c = %.4f, b = %.6f (pinned %.6f)",
                  static_cast<unsigned long long>(kGoldenSeed), spans.size(), genuine, c.value_or(-1), b, kGoldenOverhead)};
}

Outcome ilp_equivalence() {
  const auto profile = wemo_profile();
  const std::uint64_t seed = 5;
  const Trace trace = generate_trace(profile, {0.01, sec(20'000), sec(1), seed});
  auto cfg = profile_config(profile, 1.0, seed);
  const auto stp_out = stp_shape(trace, cfg);
  const auto ilp_out = ilp_shape(trace, cfg.rate_up, cfg.rate_down, cfg.cover_packet_size);

  // compare whole seconds lying inside a padded span
  std::int64_t worst = 0, compared = 0;
  for (auto dir : {DirectionFilter::Up, DirectionFilter::Down}) {
    const auto a = rate_series(stp_out.trace, sec(1), dir);
    const auto b = rate_series(ilp_out.trace, sec(1), dir);
    for (const auto& s : stp_out.schedule.spans)
      for (Micros bin = ceil_div(s.start, sec(1)); (bin + 1) * sec(1) <= s.end; ++bin) {
        if (static_cast<std::size_t>(bin) >= a.size() || static_cast<std::size_t>(bin) >= b.size()) break;
        worst = std::max(worst, std::abs(a[bin] - b[bin]));
        ++compared;
      }
  }
  const auto detections = detect_activities(ilp_out.trace, ThresholdDetector{});
  const double c = evaluate_period_confidence(stp_out.schedule).value();
  const double c_min = segment_periods(trace, cfg.period).activity_fraction();
  const bool ok = compared > 0 && worst <= cfg.cover_packet_size && detections.empty() &&
                  std::abs(c - c_min) <= kConfidenceAbsTol;
  return {ok, fmt("max per-second diff %lld B over %lld bins (cover packet %lld B), %zu ILP detections, c = %.4f vs "
                  "activity fraction %.4f",
                  static_cast<long long>(worst), static_cast<long long>(compared),
                  static_cast<long long>(cfg.cover_packet_size), detections.size(), c, c_min)};
}

double q0_overhead(const DeviceProfile& profile, std::uint64_t seed) {
  const Trace trace = generate_trace(profile, {0.01, sec(20'000), sec(1), seed});
  return empirical_overhead(trace, stp_shape(trace, profile_config(profile, 0.0, seed)).trace).value();
}

Outcome variance_ordering() {
  std::vector<double> controlled;
  for (double cv : {0.047, 0.287, 0.592}) {
    SyntheticProfileSpec spec;
    spec.name = "cv";
    spec.segment_count = 9;
    spec.min_duration = sec(1);
    spec.max_duration = sec(3);
    spec.mean_rate = 20'000;
    spec.rate_cv = cv;
    spec.packet_size = 500;
    spec.seed = 17;
    controlled.push_back(q0_overhead(synthetic_profile(spec), 3));
  }
  const std::vector<double> devices{q0_overhead(wemo_profile(), 3), q0_overhead(nest_profile(), 3),
                                    q0_overhead(echo_profile(), 3)};
  // the device stand-ins also differ in activity length vs T, so they are
  // reported but not ordered
  const bool ok = controlled[0] < controlled[1] && controlled[1] < controlled[2];
  return {ok, fmt("CV-only profiles %.2f < %.2f < %.2f (device stand-ins: %.2f, %.2f, %.2f)", controlled[0],
                  controlled[1], controlled[2], devices[0], devices[1], devices[2])};
}

Outcome invariant_suite() {
  std::mt19937_64 gen(8);
  int failures = 0;
  std::string first;
  for (int round = 0; round < 1000; ++round) {
    const Micros T = std::uniform_int_distribution<Micros>(1, 20)(gen) * 50'000;
    const Trace t = stp::test::random_trace(gen, std::uniform_int_distribution<Micros>(1, 30)(gen) * sec(1), 6);
    ShapingConfig cfg;
    cfg.period = T;
    cfg.rate_up = 1 + static_cast<double>(gen() % 40'000);
    cfg.rate_down = static_cast<double>(gen() % 40'000);
    cfg.cover_packet_size = 1 + static_cast<std::int64_t>(gen() % 1500);
    cfg.decision = BernoulliDecision{std::uniform_real_distribution<double>(0, 1)(gen), gen()};
    cfg.seed = gen();
    const auto bad = stp::test::shaping_violations(t, cfg, stp_shape(t, cfg));
    if (!bad.empty()) {
      if (failures++ == 0) first = fmt("round %d: %s", round, bad.front().c_str());
    }
  }
  return {failures == 0, failures == 0 ? "1000 randomized instances clean" : fmt("%d failing, %s", failures, first.c_str())};
}

Outcome token_bucket() {
  std::mt19937_64 gen(21);
  int priority = 0, window = 0;
  const Micros W = sec(1);
  for (int round = 0; round < 300; ++round) {
    const double rate = 1000 + static_cast<double>(gen() % 50'000);
    const std::int64_t cover = 50 + static_cast<std::int64_t>(gen() % 1450);
    std::vector<DevicePacket> pkts(gen() % 300);
    for (auto& p : pkts) p = {static_cast<Micros>(gen() % sec(8)), 1 + static_cast<std::int64_t>(gen() % 3000)};
    std::sort(pkts.begin(), pkts.end(), [](const DevicePacket& a, const DevicePacket& b) { return a.arrival < b.arrival; });
    const auto log = token_bucket_pad(pkts, rate, cover, sec(8));

    std::vector<std::int64_t> sent(pkts.size(), 0);
    for (const auto& s : log.sends) {
      if (s.is_cover) {
        for (std::size_t i = 0; i < pkts.size(); ++i)
          if (pkts[i].arrival <= s.time && sent[i] < pkts[i].size) ++priority;
      } else {
        sent[static_cast<std::size_t>(s.packet_index)] += s.size;
      }
    }
    const double cap = rate * static_cast<double>(W) / kMicrosPerSecond + static_cast<double>(cover);
    for (std::size_t i = 0; i < log.sends.size(); ++i) {
      std::int64_t bytes = 0;
      for (std::size_t j = i; j < log.sends.size() && log.sends[j].time < log.sends[i].time + W; ++j)
        bytes += log.sends[j].size;
      if (static_cast<double>(bytes) > cap) ++window;
    }
  }
  return {priority == 0 && window == 0,
          fmt("300 fixtures: %d cover-before-device sends, %d windows over R*W + one packet", priority, window)};
}

Outcome fingerprinting() {
  const auto db = reference_fingerprint_db();
  int unique_ok = 0;
  for (const auto& [device, fp] : db.entries) {
    std::set<std::string> observed = fp.domains;
    observed.insert(fp.unique_domains.begin(), fp.unique_domains.end());
    const auto m = fingerprint_device(observed, db);
    unique_ok += m.device == device && m.method == FingerprintMethod::UniqueDomain;
  }
  const bool dropcam = fingerprint_device({"nexus.dropcam.com"}, db).device == "Nest Cam Indoor";

  // overlapping sets with no unique domains; the expected device is the
  // brute-force Jaccard argmax
  std::mt19937_64 gen(5);
  std::vector<std::string> pool;
  for (int i = 0; i < 40; ++i) pool.push_back("svc" + std::to_string(i) + ".example.net");
  FingerprintDb overlap;
  for (int d = 0; d < 14; ++d) {
    auto& fp = overlap.entries["device-" + std::to_string(d)];
    for (int k = 0; k < 6; ++k) fp.domains.insert(pool[(3 * d + k) % pool.size()]);
    fp.domains.insert(pool[gen() % pool.size()]);
  }
  auto oracle = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    std::vector<std::string> inter, uni;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
    return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
  };
  int jaccard_ok = 0;
  for (const auto& [device, fp] : overlap.entries) {
    std::set<std::string> observed(std::next(fp.domains.begin()), fp.domains.end());
    std::string best;
    double best_score = -1;
    for (const auto& [other, ofp] : overlap.entries)
      if (const double s = oracle(observed, ofp.domains); s > best_score) best_score = s, best = other;
    try {
      const auto m = fingerprint_device(observed, overlap);
      jaccard_ok += m.device == best && best == device && m.method == FingerprintMethod::SetSimilarity;
    } catch (const AmbiguousFingerprint&) {
    }
  }
  return {unique_ok == 14 && dropcam && jaccard_ok == 14,
          fmt("unique-domain %d/14, Jaccard %d/14", unique_ok, jaccard_ok)};
}

Outcome determinism() {
  const std::string data = STP_DATA_DIR;
  const std::string wemo = data + "/profiles/wemo.json";
  stp::test::TempDir dir;
  auto d = [&](const char* name) { return (dir / name).string(); };
  const std::string trace = d("g") + "/trace.csv";
  std::ofstream(dir / "domains.txt") << "nexus.dropcam.com\npool.ntp.org\n";

  const std::vector<std::vector<std::string>> commands{
      {"generate", "--profile", wemo, "--p", "0.01", "--duration", "2000s", "--out-dir", d("g")},
      {"shape", "--defense", "stp", "--q", "0.05", "--T", "2s", "--trace", trace, "--out-dir", d("s")},
      {"shape", "--defense", "stp", "--decision", "hmm", "--trace", trace, "--out-dir", d("h")},
      {"shape", "--defense", "ilp", "--trace", trace, "--out-dir", d("i")},
      {"shape", "--defense", "firewall", "--trace", trace, "--out-dir", d("f")},
      {"shape", "--defense", "vpn", "--trace", trace, "--out-dir", d("v")},
      {"attack", "--trace", d("s") + "/shaped.csv", "--schedule", d("s") + "/schedule.csv", "--out-dir", d("a")},
      {"sweep", "--profile", wemo, "--q-grid", "0,0.5,1", "--runs", "3", "--duration", "500s", "--out-dir", d("w")},
      {"sweep", "--analytic", "--p", "0.01", "--format", "json", "--out-dir", d("wa")},
      {"fingerprint", "--domains", d("domains.txt"), "--db", data + "/fingerprints.json", "--out-dir", d("fp")},
  };
  int ok = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const std::string out = commands[i].back();
    if (cli::run(commands[i]) != 0) continue;
    ok += cli::run({"replay", "--manifest", out + "/manifest.json", "--out-dir", d("r") + std::to_string(i)}) == 0;
  }
  return {ok == static_cast<int>(commands.size()),
          fmt("%d/%zu command runs replayed byte-identical", ok, commands.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"confidence endpoints", confidence_endpoints},
      {"analytic tradeoff curves", analytic_tradeoff},
      {"analytic vs empirical", analytic_empirical_convergence},
      {"c/b power law", power_law},
      {"Wemo golden fixture", golden_fixture},
      {"ILP equivalence and blindness", ilp_equivalence},
      {"variance ordering", variance_ordering},
      {"shaping invariants", invariant_suite},
      {"token bucket discipline", token_bucket},
      {"fingerprinting", fingerprinting},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %-30s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
