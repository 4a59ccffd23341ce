#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stp/detection.hpp"
#include "stp/shaping.hpp"

namespace stp {

enum class SpanVerdict { Genuine, Unknown };

struct InferenceReport {
  std::vector<Interval> detected;     ///< threshold detections on the shaped trace
  std::vector<SpanVerdict> verdicts;  ///< per schedule span: Genuine if a detection overlaps it
  std::optional<double> confidence;   ///< span-level c; nullopt when there are no spans
  std::optional<double> period_confidence;  ///< instance-level c
  double c_min = 0;                   ///< fraction of T-periods containing activity
};

/// Runs the passive observer over a shaped result. Detection and verdicts use
/// only event times, sizes, and directions plus schedule span boundaries;
/// confidence is then scored against the hidden ground truth.
InferenceReport classify_spans(const ShapedResult& shaped, const ThresholdDetector& det);

/// Genuine spans / spans.
std::optional<double> evaluate_confidence(const PaddingSchedule& schedule);

/// Genuine pattern instances / instances; the per-period estimator whose
/// expectation is (1 + (1-p) q / p)^-1.
std::optional<double> evaluate_period_confidence(const PaddingSchedule& schedule);

struct DeviceFingerprint {
  std::set<std::string> unique_domains;
  std::set<std::string> domains;
};

struct FingerprintDb {
  std::map<std::string, DeviceFingerprint> entries;
};

enum class FingerprintMethod { UniqueDomain, SetSimilarity, Unknown };

std::string_view to_string(FingerprintMethod m);

struct FingerprintMatch {
  std::string device;  ///< empty when method == Unknown
  FingerprintMethod method = FingerprintMethod::Unknown;
  double similarity = 0;  ///< Jaccard score for SetSimilarity
};

class AmbiguousFingerprint : public Error {
 public:
  explicit AmbiguousFingerprint(std::vector<std::string> candidates);
  const std::vector<std::string>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<std::string> candidates_;
};

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// A domain that is unique to exactly one device wins outright; otherwise the
/// device with the highest Jaccard similarity. Ties throw AmbiguousFingerprint.
FingerprintMatch fingerprint_device(const std::set<std::string>& observed, const FingerprintDb& db);

void to_json(nlohmann::json& j, const FingerprintDb& db);
void from_json(const nlohmann::json& j, FingerprintDb& db);
void to_json(nlohmann::json& j, const InferenceReport& r);

}  // namespace stp
