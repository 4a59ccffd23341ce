#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "stp/adversary.hpp"
#include "stp/decision.hpp"
#include "stp/generator.hpp"
#include "stp/metrics.hpp"
#include "stp/shaping.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stp::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return hex.str();
}

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

const CLI::Validator kDuration(
    [](std::string& s) {
      try {
        parse_duration(s);
        return std::string();
      } catch (const std::exception& e) {
        return std::string(e.what());
      }
    },
    "DURATION", "duration");

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "csv";
};

/// Collects outputs and writes the run manifest after them.
class Run {
 public:
  Run(std::string command, std::vector<std::string> args, const Globals& g)
      : command_(std::move(command)), args_(std::move(args)), dir_(g.out_dir) {
    if (g.seed) {
      seed_ = *g.seed;
    } else {
      std::random_device rd;
      seed_ = (std::uint64_t{rd()} << 32) | rd();
      seed_generated_ = true;
    }
    fs::create_directories(dir_);
  }

  std::uint64_t seed() const { return seed_; }
  json& config() { return config_; }

  void input(const std::string& path) { inputs_.push_back(path); }

  void output(const std::string& name, const std::function<void(std::ostream&)>& write) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write(out);
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
    outputs_.push_back(name);
  }

  void output_json(const std::string& name, const json& j) {
    output(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }

  void finish() {
    json m{{"command", command_},
           {"args", args_},
           {"config", config_},
           {"base_seed", seed_},
           {"seed_generated", seed_generated_},
           {"tool_version", kToolVersion},
           {"inputs", json::array()},
           {"outputs", json::array()}};
    for (const auto& p : inputs_) m["inputs"].push_back({{"path", p}, {"sha256", sha256_file(p)}});
    for (const auto& p : outputs_) m["outputs"].push_back({{"path", p}, {"sha256", sha256_file((dir_ / p).string())}});
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) throw Error("cannot write manifest");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path dir_;
  std::uint64_t seed_ = 0;
  bool seed_generated_ = false;
  json config_ = json::object();
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

/// Drops --seed and --out-dir from an argument list; they are recorded
/// separately so a replay can redirect output.
std::vector<std::string> replayable_args(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--seed" || a == "--out-dir") {
      ++i;
      continue;
    }
    if (a.starts_with("--seed=") || a.starts_with("--out-dir=")) continue;
    out.push_back(a);
  }
  return out;
}

Trace load(Run& run, const std::string& path) {
  if (!fs::exists(path)) throw Error("missing input: " + path);
  auto loaded = load_trace(path);
  if (loaded.resorted) std::cerr << "warning: " << path << ": timestamps were not monotone; events re-sorted\n";
  run.input(path);
  if (const auto labels = label_path_for(path); fs::exists(labels)) run.input(labels.string());
  return std::move(loaded.trace);
}

DeviceProfile load_profile_input(Run& run, const std::string& path) {
  if (!fs::exists(path)) throw Error("missing input: " + path);
  run.input(path);
  return load_profile(path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_trace_pair(Run& run, const std::string& name, const Trace& trace) {
  run.output(name + ".csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
  run.output(name + ".labels.csv", [&](std::ostream& o) { write_label_csv(o, trace.labels); });
}

json optional_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------- generate

struct GenerateOpts {
  std::string profile;
  double p = 0;
  std::string duration;
  std::string tick = "1s";
  std::string period;
};

void cmd_generate(const GenerateOpts& o, Run& run) {
  const DeviceProfile profile = load_profile_input(run, o.profile);
  const GeneratorConfig gen{o.p, parse_duration(o.duration), parse_duration(o.tick), run.seed()};
  const Micros period = o.period.empty() ? default_period(profile) : parse_duration(o.period);
  run.config() = {{"profile", o.profile}, {"p", gen.p}, {"duration_us", gen.duration},
                  {"decision_tick_us", gen.decision_tick}, {"period_us", period}};

  const Trace trace = generate_trace(profile, gen);
  write_trace_pair(run, "trace", trace);
  run.output_json("stats.json", compute_stats(trace, segment_periods(trace, period)));
  run.finish();
}

// ---------------------------------------------------------------- shape

struct ShapeOpts {
  std::string defense;
  std::vector<std::string> traces;
  std::string profile;
  double q = 0.05;
  std::string period;
  std::optional<double> rate_up;
  std::optional<double> rate_down;
  std::string decision = "bernoulli";
  std::string hmm;
  int hmm_states = 2;
  std::string detector = "oracle";
  double k = 3;
  std::string bin = "1s";
  std::string gap = "2s";
  std::int64_t cover_size = 1400;
  std::string fill_bin = "1s";
  std::int64_t encap = 0;
};

ThresholdDetector detector_from(double k, const std::string& bin, const std::string& gap) {
  ThresholdDetector d;
  d.k = k;
  d.bin = parse_duration(bin);
  d.min_quiet_gap = parse_duration(gap);
  d.validate();
  return d;
}

/// Rates and period default to the profile (or to activities extracted from
/// the trace's labels) when not given on the command line.
struct Resolved {
  double rate_up = 0;
  double rate_down = 0;
  Micros period = 10 * kMicrosPerSecond;
};

Resolved resolve_pattern(const ShapeOpts& o, const Trace& trace, const std::optional<DeviceProfile>& given) {
  Resolved r;
  std::optional<DeviceProfile> profile = given;
  const bool need_profile = !o.rate_up || !o.rate_down || o.period.empty();
  if (need_profile && !profile && !trace.labels.empty()) {
    auto extracted = profile_from_trace(trace, "trace");
    for (const auto& w : extracted.warnings) std::cerr << "warning: " << w << '\n';
    profile = std::move(extracted.profile);
  }
  if ((!o.rate_up || !o.rate_down) && !profile)
    throw Error("cannot infer pattern rates without labels or --profile; pass --rate-up and --rate-down");
  if (profile) {
    const auto [up, down] = peak_activity_rates(*profile);
    r.rate_up = up;
    r.rate_down = down;
    r.period = default_period(*profile);
  }
  if (o.rate_up) r.rate_up = *o.rate_up;
  if (o.rate_down) r.rate_down = *o.rate_down;
  if (!o.period.empty()) r.period = parse_duration(o.period);
  return r;
}

void cmd_shape(const ShapeOpts& o, Run& run) {
  if (o.defense != "vpn" && o.traces.size() != 1) throw UsageError("--defense " + o.defense + " takes exactly one --trace");

  json& cfg = run.config();
  cfg = {{"defense", o.defense}, {"traces", o.traces}};
  Trace original;
  ShapedResult shaped;
  shaped.trace.duration = 0;

  if (o.defense == "vpn") {
    std::vector<NamedTrace> devices;
    for (const auto& path : o.traces) devices.push_back({fs::path(path).stem().string(), load(run, path)});
    for (const auto& d : devices) {
      original.events.insert(original.events.end(), d.trace.events.begin(), d.trace.events.end());
      original.duration = std::max(original.duration, d.trace.duration);
    }
    shaped.trace = vpn_aggregate(devices, o.encap);
    cfg["encapsulation_bytes"] = o.encap;
  } else {
    original = load(run, o.traces.front());
    std::optional<DeviceProfile> profile;
    if (!o.profile.empty()) profile = load_profile_input(run, o.profile);
    if (o.defense == "firewall") {
      shaped.trace = firewall_filter(original);
    } else if (o.defense == "ilp") {
      const auto r = resolve_pattern(o, original, profile);
      const Micros slice = parse_duration(o.fill_bin);
      cfg.update({{"rate_up", r.rate_up}, {"rate_down", r.rate_down}, {"cover_packet_size", o.cover_size},
                  {"slice_us", slice}});
      shaped = ilp_shape(original, r.rate_up, r.rate_down, o.cover_size, slice);
    } else {
      if (o.detector == "oracle" && original.labels.empty())
        throw Error("labels required: --detector oracle needs " + label_path_for(o.traces.front()).string());
      const auto r = resolve_pattern(o, original, profile);
      ShapingConfig sc;
      sc.rate_up = r.rate_up;
      sc.rate_down = r.rate_down;
      sc.period = r.period;
      sc.cover_packet_size = o.cover_size;
      sc.fill_bin = parse_duration(o.fill_bin);
      sc.seed = mix_seed(run.seed(), 2, 0);
      if (o.detector == "threshold") sc.detector = detector_from(o.k, o.bin, o.gap);

      const std::uint64_t decision_seed = mix_seed(run.seed(), 1, 0);
      if (o.decision == "hmm") {
        ActivityHmm model;
        if (!o.hmm.empty()) {
          run.input(o.hmm);
          model = read_json(o.hmm).get<ActivityHmm>();
        } else {
          HmmFitOptions fo;
          fo.state_count = o.hmm_states;
          fo.seed = decision_seed;
          const auto flags = segment_periods(original, sc.period).activity_flags;
          auto fit = hmm_fit(flags, fo);
          for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
          model = std::move(fit.model);
        }
        model.seed = decision_seed;
        run.output_json("hmm.json", model);
        sc.decision = model;
        cfg["decision"] = {{"kind", "hmm"}, {"model", model}};
      } else {
        sc.decision = BernoulliDecision{o.q, decision_seed};
        cfg["decision"] = {{"kind", "bernoulli"}, {"q", o.q}, {"seed", decision_seed}};
      }
      cfg.update({{"rate_up", sc.rate_up}, {"rate_down", sc.rate_down}, {"period_us", sc.period},
                  {"cover_packet_size", sc.cover_packet_size}, {"fill_bin_us", sc.fill_bin},
                  {"offset_seed", sc.seed}});
      if (sc.detector)
        cfg["detector"] = {{"kind", "threshold"}, {"k", sc.detector->k}, {"bin_us", sc.detector->bin},
                           {"min_quiet_gap_us", sc.detector->min_quiet_gap}};
      else
        cfg["detector"] = {{"kind", "oracle"}};
      shaped = stp_shape(original, sc);
    }
  }

  write_trace_pair(run, "shaped", shaped.trace);
  run.output("schedule.csv", [&](std::ostream& out) { write_schedule_csv(out, shaped.schedule); });
  run.output_json("overflow.json", overflow_report(shaped));

  const auto genuine_spans = std::count_if(shaped.schedule.spans.begin(), shaped.schedule.spans.end(),
                                           [](const PaddedSpan& s) { return s.genuine; });
  const auto genuine_instances = std::count_if(shaped.schedule.instances.begin(), shaped.schedule.instances.end(),
                                               [](const PatternInstance& s) { return s.genuine; });
  run.output_json("stats.json", {{"defense", o.defense},
                                 {"original_bytes", original.total_bytes()},
                                 {"shaped_bytes", shaped.trace.total_bytes()},
                                 {"overhead", optional_json(empirical_overhead(original, shaped.trace))},
                                 {"spans", shaped.schedule.spans.size()},
                                 {"genuine_spans", genuine_spans},
                                 {"instances", shaped.schedule.instances.size()},
                                 {"genuine_instances", genuine_instances},
                                 {"confidence", optional_json(evaluate_confidence(shaped.schedule))},
                                 {"period_confidence", optional_json(evaluate_period_confidence(shaped.schedule))},
                                 {"overflow_count", shaped.overflow.size()}});
  run.finish();
}

// ---------------------------------------------------------------- attack

struct AttackOpts {
  std::string trace;
  std::string schedule;
  double k = 3;
  std::string bin = "1s";
  std::string gap = "2s";
};

void cmd_attack(const AttackOpts& o, Run& run) {
  const ThresholdDetector det = detector_from(o.k, o.bin, o.gap);
  run.config() = {{"trace", o.trace}, {"schedule", o.schedule}, {"k", det.k}, {"bin_us", det.bin},
                  {"min_quiet_gap_us", det.min_quiet_gap}};
  ShapedResult shaped;
  shaped.trace = load(run, o.trace);

  json report;
  if (!o.schedule.empty()) {
    if (!fs::exists(o.schedule)) throw Error("missing input: " + o.schedule);
    run.input(o.schedule);
    std::ifstream in(o.schedule);
    shaped.schedule = read_schedule_csv(in);
    report = classify_spans(shaped, det);
  } else {
    Trace observed = shaped.trace;
    observed.labels.clear();
    json detected = json::array();
    for (const auto& iv : detect_activities(observed, det)) detected.push_back({{"start_us", iv.start}, {"end_us", iv.end}});
    report = {{"detected", std::move(detected)}};
  }

  // ground truth, when the trace carries labels
  if (!shaped.trace.labels.empty()) {
    const auto detected = detect_activities(shaped.trace, det);
    std::size_t hit = 0;
    for (const auto& l : shaped.trace.labels) {
      const Interval iv{l.start, l.end};
      hit += std::any_of(detected.begin(), detected.end(), [&](const Interval& d) { return d.overlaps(iv); });
    }
    report["label_count"] = shaped.trace.labels.size();
    report["recall"] = static_cast<double>(hit) / static_cast<double>(shaped.trace.labels.size());
  }
  run.output_json("report.json", report);
  run.finish();
  std::cout << report["detected"].size() << " detections\n";
}

// ---------------------------------------------------------------- sweep

struct SweepOpts {
  bool analytic = false;
  std::string profile;
  double p = 0.01;
  std::string q_grid = "0:1:0.01";
  int runs = 50;
  std::string duration = "10000s";
  std::string tick = "1s";
  std::string period;
  std::optional<double> rate_up;
  std::optional<double> rate_down;
  std::int64_t cover_size = 1400;
  int parallel = 1;
  double rt = 1;
  double da = 0.9;
  double dna = 0;
};

int cmd_sweep(const SweepOpts& o, Run& run, const std::string& format) {
  std::vector<double> grid;
  try {
    grid = parse_q_grid(o.q_grid);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (grid.empty()) throw UsageError("q grid is empty");

  SweepResult result;
  json& cfg = run.config();
  cfg = {{"analytic", o.analytic}, {"p", o.p}, {"q_grid", grid}};
  if (o.analytic) {
    AnalyticParams a;
    a.p = o.p;
    a.rate = o.rt;  // normalized: R T = rt with T = 1 s
    a.period = kMicrosPerSecond;
    a.d_a = o.da;
    a.d_not_a = o.dna;
    result.fitted = a;
    result.points = analytic_curve(a, grid);
    cfg.update({{"rt", o.rt}, {"d_a", o.da}, {"d_not_a", o.dna}});
  } else {
    if (o.profile.empty()) throw UsageError("--profile is required unless --analytic");
    const DeviceProfile profile = load_profile_input(run, o.profile);
    SweepConfig sc;
    sc.p = o.p;
    sc.q_grid = grid;
    sc.runs = o.runs;
    sc.duration = parse_duration(o.duration);
    sc.decision_tick = parse_duration(o.tick);
    const auto [up, down] = peak_activity_rates(profile);
    sc.shaping.rate_up = o.rate_up.value_or(up);
    sc.shaping.rate_down = o.rate_down.value_or(down);
    sc.shaping.period = o.period.empty() ? default_period(profile) : parse_duration(o.period);
    sc.shaping.cover_packet_size = o.cover_size;
    sc.base_seed = run.seed();
    sc.parallel = o.parallel;
    cfg.update({{"profile", o.profile}, {"runs", sc.runs}, {"duration_us", sc.duration},
                {"decision_tick_us", sc.decision_tick}, {"rate_up", sc.shaping.rate_up},
                {"rate_down", sc.shaping.rate_down}, {"period_us", sc.shaping.period},
                {"cover_packet_size", sc.shaping.cover_packet_size}});
    result = sweep(profile, sc);
  }

  if (format == "json")
    run.output_json("sweep.json", sweep_json(result));
  else
    run.output("sweep.csv", [&](std::ostream& out) { write_sweep_csv(out, result.points); });
  run.finish();

  bool any_empirical = false, all_failed = true;
  for (const auto& pt : result.points) {
    if (pt.kind != PointKind::Empirical) continue;
    any_empirical = true;
    if (pt.failed)
      std::cerr << "warning: q=" << pt.q << " failed: " << pt.error << '\n';
    else
      all_failed = false;
  }
  if (any_empirical && all_failed) {
    std::cerr << "error: every sweep point failed\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------- fingerprint

struct FingerprintOpts {
  std::string domains;
  std::string db;
};

void cmd_fingerprint(const FingerprintOpts& o, Run& run) {
  run.config() = {{"domains", o.domains}, {"db", o.db}};
  for (const auto& p : {o.domains, o.db})
    if (!fs::exists(p)) throw Error("missing input: " + p);
  run.input(o.domains);
  run.input(o.db);

  std::set<std::string> observed;
  std::ifstream in(o.domains);
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    observed.insert(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
  }
  const FingerprintDb db = read_json(o.db).get<FingerprintDb>();
  const FingerprintMatch m = fingerprint_device(observed, db);
  const json out{{"device", m.method == FingerprintMethod::Unknown ? json(nullptr) : json(m.device)},
                 {"method", to_string(m.method)},
                 {"similarity", m.similarity}};
  run.output_json("fingerprint.json", out);
  run.finish();
  std::cout << (m.device.empty() ? "unknown" : m.device) << '\n';
}

// ---------------------------------------------------------------- replay

int cmd_replay(const std::string& manifest_path, const Globals& g) {
  const json m = read_json(manifest_path);
  for (const auto& in : m.at("inputs")) {
    const auto path = in.at("path").get<std::string>();
    if (sha256_file(path) != in.at("sha256").get<std::string>()) throw Error("input changed since the run: " + path);
  }
  auto args = m.at("args").get<std::vector<std::string>>();
  args.insert(args.end(), {"--seed", std::to_string(m.at("base_seed").get<std::uint64_t>()), "--out-dir", g.out_dir});
  if (const int rc = run(args); rc != 0) return rc;

  int mismatches = 0;
  for (const auto& out : m.at("outputs")) {
    const auto name = out.at("path").get<std::string>();
    if (sha256_file((fs::path(g.out_dir) / name).string()) != out.at("sha256").get<std::string>()) {
      std::cerr << "mismatch: " << name << '\n';
      ++mismatches;
    }
  }
  if (mismatches) return 1;
  std::cout << "replay ok: " << m.at("outputs").size() << " outputs identical\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Smart-home traffic shaping simulator", "stpsim"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "base seed (generated and recorded when omitted)");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--format", g.format, "tabular output format")->check(CLI::IsMember({"csv", "json"}));

  GenerateOpts gen;
  auto* generate = app.add_subcommand("generate", "synthesize a labeled trace from a device profile");
  generate->add_option("--profile", gen.profile, "device profile JSON")->required();
  generate->add_option("--p", gen.p, "activity probability per decision tick")->required()->check(CLI::Range(0.0, 1.0));
  generate->add_option("--duration", gen.duration, "trace length")->required()->check(kDuration);
  generate->add_option("--tick", gen.tick, "decision tick")->check(kDuration);
  generate->add_option("--T", gen.period, "period used for stats (default: profile)")->check(kDuration);

  ShapeOpts sh;
  auto* shape = app.add_subcommand("shape", "apply a defense to traces");
  shape->add_option("--defense", sh.defense)->required()->check(CLI::IsMember({"stp", "ilp", "firewall", "vpn"}));
  shape->add_option("--trace", sh.traces, "input trace CSV (repeat for vpn)")->required();
  shape->add_option("--profile", sh.profile, "device profile for default R and T");
  shape->add_option("--q", sh.q, "decoy probability per period")->check(CLI::Range(0.0, 1.0));
  shape->add_option("--T", sh.period, "pattern period")->check(kDuration);
  shape->add_option("--rate-up", sh.rate_up, "upload pattern rate, bytes/s")->check(CLI::NonNegativeNumber);
  shape->add_option("--rate-down", sh.rate_down, "download pattern rate, bytes/s")->check(CLI::NonNegativeNumber);
  shape->add_option("--decision", sh.decision)->check(CLI::IsMember({"bernoulli", "hmm"}));
  shape->add_option("--hmm", sh.hmm, "HMM JSON (fitted from the trace's labels when omitted)");
  shape->add_option("--hmm-states", sh.hmm_states)->check(CLI::Range(2, 16));
  shape->add_option("--detector", sh.detector)->check(CLI::IsMember({"oracle", "threshold"}));
  shape->add_option("--k", sh.k, "threshold detector stddevs")->check(CLI::NonNegativeNumber);
  shape->add_option("--bin", sh.bin, "threshold detector bin")->check(kDuration);
  shape->add_option("--gap", sh.gap, "threshold detector merge gap")->check(kDuration);
  shape->add_option("--cover-size", sh.cover_size, "cover packet bytes")->check(CLI::PositiveNumber);
  shape->add_option("--fill-bin", sh.fill_bin, "pattern grid width")->check(kDuration);
  shape->add_option("--encap", sh.encap, "per-packet tunnel overhead bytes")->check(CLI::NonNegativeNumber);

  AttackOpts at;
  auto* attack = app.add_subcommand("attack", "run the rate-threshold observer");
  attack->add_option("--trace", at.trace, "observed trace CSV")->required();
  attack->add_option("--schedule", at.schedule, "padding schedule CSV for confidence scoring");
  attack->add_option("--k", at.k, "threshold in stddevs above the mean")->check(CLI::NonNegativeNumber);
  attack->add_option("--bin", at.bin, "rate bin width")->check(kDuration);
  attack->add_option("--gap", at.gap, "merge flagged runs closer than this")->check(kDuration);

  SweepOpts sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "confidence/overhead trade-off over a q grid");
  sweep_cmd->add_flag("--analytic", sw.analytic, "closed-form curve only");
  sweep_cmd->add_option("--profile", sw.profile, "device profile JSON");
  sweep_cmd->add_option("--p", sw.p, "activity probability per decision tick")->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("--q-grid", sw.q_grid, "a,b,c or start:stop:step");
  sweep_cmd->add_option("--runs", sw.runs, "runs per q")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--duration", sw.duration, "trace length per run")->check(kDuration);
  sweep_cmd->add_option("--tick", sw.tick, "decision tick")->check(kDuration);
  sweep_cmd->add_option("--T", sw.period, "pattern period")->check(kDuration);
  sweep_cmd->add_option("--rate-up", sw.rate_up, "upload pattern rate, bytes/s")->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--rate-down", sw.rate_down, "download pattern rate, bytes/s")->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--cover-size", sw.cover_size, "cover packet bytes")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--parallel", sw.parallel, "worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--rt", sw.rt, "analytic R*T in bytes")->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--da", sw.da, "analytic D_A in bytes")->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--dna", sw.dna, "analytic D_notA in bytes")->check(CLI::NonNegativeNumber);

  FingerprintOpts fp;
  auto* fingerprint = app.add_subcommand("fingerprint", "identify a device from contacted domains");
  fingerprint->add_option("--domains", fp.domains, "one domain per line")->required();
  fingerprint->add_option("--db", fp.db, "fingerprint database JSON")->required();

  std::string manifest;
  auto* replay = app.add_subcommand("replay", "re-run a manifest and verify output digests");
  replay->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto recorded = replayable_args(args);
  try {
    if (replay->parsed()) return cmd_replay(manifest, g);
    if (generate->parsed()) {
      Run r("generate", recorded, g);
      cmd_generate(gen, r);
    } else if (shape->parsed()) {
      Run r("shape", recorded, g);
      cmd_shape(sh, r);
    } else if (attack->parsed()) {
      Run r("attack", recorded, g);
      cmd_attack(at, r);
    } else if (sweep_cmd->parsed()) {
      Run r("sweep", recorded, g);
      return cmd_sweep(sw, r, g.format);
    } else if (fingerprint->parsed()) {
      Run r("fingerprint", recorded, g);
      cmd_fingerprint(fp, r);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace stp::cli
