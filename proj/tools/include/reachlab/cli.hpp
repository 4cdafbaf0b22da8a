#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace reachlab::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kValidationError = 3,
  kInfeasiblePoint = 4,
  kIoError = 5,
};

/// Environment variable consulted when --workers is not given.
inline constexpr const char* kWorkersEnv = "REACHLAB_WORKERS";

/// Runs one command line. Single-value answers go to `out`, progress and
/// diagnostics to `err`; files are written atomically with a manifest beside them.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace reachlab::cli
