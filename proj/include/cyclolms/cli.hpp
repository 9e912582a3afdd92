#pragma once

// Command-line front end. run_cli() is the whole program minus main(), so the
// tests can drive it with captured streams.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace cyclolms::cli {

inline constexpr const char* kToolName = "cyclo_lms";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kOutputSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad flags, unreadable or invalid scenario
  kExitNumerical = 2,  // singular systems, realness violations, unstable compare
  kExitDiverged = 3,   // every Monte Carlo trial diverged
};

struct GridSpec {
  double start = 0.0;
  double stop = 100.0;
  double step = 1e-3;
};

/// Everything that determines a command's output. The timestamp is kept out
/// of the embedded copy so that re-running a manifest reproduces the files
/// byte for byte; it only goes to the manifest.json sidecar.
struct RunManifest {
  std::string command;
  std::string scenario;
  std::vector<double> mus;
  std::size_t horizon = 0;
  std::size_t trials = 0;
  std::optional<std::uint64_t> seed;
  GridSpec grid;
  std::string format = "csv";
  std::optional<std::size_t> moment_draws;
  std::optional<std::size_t> fourth_order_draws;
  std::string timestamp;

  nlohmann::json to_json(bool with_timestamp) const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Executes a manifest; output files go to out_dir.
int run_manifest(const RunManifest& manifest, const std::string& out_dir, std::ostream& out, std::ostream& err);

}  // namespace cyclolms::cli
