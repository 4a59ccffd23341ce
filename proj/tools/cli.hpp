#pragma once

#include <string>
#include <vector>

namespace stp::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one command line (without the program name). Returns the process exit
/// code: 0 success, 1 runtime or I/O error, 2 usage error.
int run(const std::vector<std::string>& args);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace stp::cli
