#include "stp/adversary.hpp"

#include <algorithm>

namespace stp {

InferenceReport classify_spans(const ShapedResult& shaped, const ThresholdDetector& det) {
  // the observer never sees is_cover, labels, or genuine flags
  Trace observed;
  observed.duration = shaped.trace.duration;
  observed.events.reserve(shaped.trace.events.size());
  for (const auto& e : shaped.trace.events)
    observed.events.push_back(TraceEvent{e.timestamp, e.direction, e.size, std::string(), false});

  InferenceReport report;
  report.detected = detect_activities(observed, det);
  std::size_t di = 0;
  for (const auto& span : shaped.schedule.spans) {
    const Interval iv{span.start, span.end};
    while (di < report.detected.size() && report.detected[di].end <= iv.start) ++di;
    const bool hit = di < report.detected.size() && report.detected[di].overlaps(iv);
    report.verdicts.push_back(hit ? SpanVerdict::Genuine : SpanVerdict::Unknown);
  }

  report.confidence = evaluate_confidence(shaped.schedule);
  report.period_confidence = evaluate_period_confidence(shaped.schedule);
  const Micros period = shaped.schedule.period_length > 0 ? shaped.schedule.period_length : det.bin;
  report.c_min = segment_periods(shaped.trace, period).activity_fraction();
  return report;
}

std::optional<double> evaluate_confidence(const PaddingSchedule& schedule) {
  if (schedule.spans.empty()) return std::nullopt;
  const auto genuine = std::count_if(schedule.spans.begin(), schedule.spans.end(),
                                     [](const PaddedSpan& s) { return s.genuine; });
  return static_cast<double>(genuine) / static_cast<double>(schedule.spans.size());
}

std::optional<double> evaluate_period_confidence(const PaddingSchedule& schedule) {
  if (schedule.instances.empty()) return std::nullopt;
  const auto genuine = std::count_if(schedule.instances.begin(), schedule.instances.end(),
                                     [](const PatternInstance& s) { return s.genuine; });
  return static_cast<double>(genuine) / static_cast<double>(schedule.instances.size());
}

std::string_view to_string(FingerprintMethod m) {
  switch (m) {
    case FingerprintMethod::UniqueDomain: return "unique-domain";
    case FingerprintMethod::SetSimilarity: return "set-similarity";
    case FingerprintMethod::Unknown: break;
  }
  return "unknown";
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

AmbiguousFingerprint::AmbiguousFingerprint(std::vector<std::string> candidates)
    : Error("ambiguous fingerprint; candidates: " + join(candidates)), candidates_(std::move(candidates)) {}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

FingerprintMatch fingerprint_device(const std::set<std::string>& observed, const FingerprintDb& db) {
  if (db.entries.empty()) throw InvalidArgument("fingerprint database is empty");
  if (observed.empty()) return {};

  std::set<std::string> unique_hits;
  for (const auto& domain : observed) {
    std::vector<std::string> owners;
    for (const auto& [device, fp] : db.entries)
      if (fp.unique_domains.count(domain)) owners.push_back(device);
    if (owners.size() == 1) unique_hits.insert(owners.front());
  }
  if (unique_hits.size() == 1) return {*unique_hits.begin(), FingerprintMethod::UniqueDomain, 1.0};

  double best = 0;
  std::vector<std::string> leaders;
  for (const auto& [device, fp] : db.entries) {
    std::set<std::string> all = fp.domains;
    all.insert(fp.unique_domains.begin(), fp.unique_domains.end());
    const double score = jaccard(observed, all);
    if (score > best) {
      best = score;
      leaders = {device};
    } else if (score == best && score > 0) {
      leaders.push_back(device);
    }
  }
  if (leaders.empty()) return {};
  if (leaders.size() > 1) throw AmbiguousFingerprint(std::move(leaders));
  return {leaders.front(), FingerprintMethod::SetSimilarity, best};
}

void to_json(nlohmann::json& j, const FingerprintDb& db) {
  j = nlohmann::json::object();
  for (const auto& [device, fp] : db.entries) j[device] = {{"unique", fp.unique_domains}, {"domains", fp.domains}};
}

void from_json(const nlohmann::json& j, FingerprintDb& db) {
  db.entries.clear();
  for (const auto& [device, entry] : j.items()) {
    DeviceFingerprint fp;
    fp.unique_domains = entry.value("unique", std::set<std::string>{});
    fp.domains = entry.value("domains", std::set<std::string>{});
    db.entries.emplace(device, std::move(fp));
  }
}

void to_json(nlohmann::json& j, const InferenceReport& r) {
  nlohmann::json detected = nlohmann::json::array();
  for (const auto& iv : r.detected) detected.push_back({{"start_us", iv.start}, {"end_us", iv.end}});
  nlohmann::json verdicts = nlohmann::json::array();
  for (auto v : r.verdicts) verdicts.push_back(v == SpanVerdict::Genuine ? "genuine" : "unknown");
  j = nlohmann::json{{"detected", std::move(detected)},
                     {"span_verdicts", std::move(verdicts)},
                     {"confidence", r.confidence ? nlohmann::json(*r.confidence) : nlohmann::json(nullptr)},
                     {"confidence_undefined", !r.confidence.has_value()},
                     {"period_confidence",
                      r.period_confidence ? nlohmann::json(*r.period_confidence) : nlohmann::json(nullptr)},
                     {"c_min", r.c_min}};
}

}  // namespace stp
