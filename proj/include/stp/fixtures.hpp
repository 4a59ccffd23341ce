#pragma once

#include "stp/adversary.hpp"
#include "stp/generator.hpp"

namespace stp {

/// Synthetic stand-ins for the recorded devices. Segment counts, durations,
/// and activity-rate stddev/mean ratios follow the measured devices; absolute
/// byte rates are invented. No background traffic.
DeviceProfile wemo_profile();  ///< 7 activities around 1 s, rate CV 4.7%
DeviceProfile echo_profile();  ///< 9 activities of 2-5 s, rate CV 59.2%
DeviceProfile nest_profile();  ///< 7 activities of 8-15 s, rate CV 28.7%

/// One identifying domain per device plus a few shared cloud domains.
FingerprintDb reference_fingerprint_db();

}  // namespace stp
