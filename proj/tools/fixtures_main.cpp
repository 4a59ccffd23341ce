// Writes the built-in device profiles and fingerprint database as JSON.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "stp/fixtures.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path root = argc > 1 ? argv[1] : "data";
  try {
    std::filesystem::create_directories(root / "profiles");
    const std::pair<const char*, stp::DeviceProfile> profiles[] = {
        {"wemo", stp::wemo_profile()}, {"echo", stp::echo_profile()}, {"nest", stp::nest_profile()}};
    for (const auto& [name, profile] : profiles) {
      std::ofstream out(root / "profiles" / (std::string(name) + ".json"));
      out << nlohmann::json(profile).dump(1) << '\n';
      if (!out) throw stp::Error("write failed");
    }
    std::ofstream out(root / "fingerprints.json");
    out << nlohmann::json(stp::reference_fingerprint_db()).dump(2) << '\n';
    if (!out) throw stp::Error("write failed");
  } catch (const std::exception& e) {
    std::cerr << "stp-fixtures: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
