#include "stp/fixtures.hpp"

namespace stp {

DeviceProfile wemo_profile() {
  return synthetic_profile({.name = "wemo",
                            .segment_count = 7,
                            .min_duration = 800'000,
                            .max_duration = 1'200'000,
                            .mean_rate = 6'000,
                            .up_fraction = 0.4,
                            .rate_cv = 0.047,
                            .packet_size = 300,
                            .seed = 11});
}

DeviceProfile echo_profile() {
  return synthetic_profile({.name = "echo",
                            .segment_count = 9,
                            .min_duration = 2 * kMicrosPerSecond,
                            .max_duration = 5 * kMicrosPerSecond,
                            .mean_rate = 40'000,
                            .up_fraction = 0.3,
                            .rate_cv = 0.592,
                            .packet_size = 1000,
                            .seed = 12});
}

DeviceProfile nest_profile() {
  return synthetic_profile({.name = "nest",
                            .segment_count = 7,
                            .min_duration = 8 * kMicrosPerSecond,
                            .max_duration = 15 * kMicrosPerSecond,
                            .mean_rate = 150'000,
                            .up_fraction = 0.8,
                            .rate_cv = 0.287,
                            .packet_size = 1400,
                            .seed = 13});
}

FingerprintDb reference_fingerprint_db() {
  const std::pair<const char*, const char*> table[] = {
      {"Amcrest Security Camera", "dh.amcrestsecurity.com"},
      {"Amazon Echo", "device-metrics-us.amazon.com"},
      {"Belkin Wemo Switch", "prod1-fs-xbcs-net-1101221371"},
      {"D-Link Wi-Fi Camera", "signal.auto.mydlink.com"},
      {"Geeni Lux lightbulb", "a.gw.tuyaus.com"},
      {"Google Home", "clients1.google.com"},
      {"Nest Cam Indoor", "nexus.dropcam.com"},
      {"Orvibo Smart Socket", "wiwo.orvibo.com"},
      {"Phillips Hue Starter Set", "diagnostics.meethue.com"},
      {"Samsung SmartCam", "xmpp.samsungsmartcam.com"},
      {"Samsung SmartThings Hub", "dc.connect.smartthings.com"},
      {"Sense Sleep Monitor", "sense-in.hello.is"},
      {"TP-Link Smart Plug", "devs.tplinkcloud.com"},
      {"Wink Hub", "agent-v1-production.wink.com"},
  };
  FingerprintDb db;
  for (const auto& [device, domain] : table) {
    DeviceFingerprint fp;
    fp.unique_domains = {domain};
    fp.domains = {"pool.ntp.org", "time.google.com"};
    db.entries.emplace(device, std::move(fp));
  }
  return db;
}

}  // namespace stp
