#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsa/oracle.hpp"
#include "qsa/protocol.hpp"
#include "qsa/scenario.hpp"

namespace qsa::cli {

struct TrajectorySettings {
  double k = 1.0 / 500;
  std::size_t n_traj = 200;
  std::size_t points = 501;
};

struct OracleSettings {
  double k = 0.0;
  /// Co-moving window; defaults() centres it on q0.
  Grid grid{-4500.0, 2500.0, 1u << 14};
  double dt = 0.05;
  std::size_t outputs = 201;
};

struct ProtocolSettings {
  std::size_t n_particles = 100000;
  double n_ref_factor = 100.0;
  double z = 20.0;
  double delta_sec = 0.05;
  std::size_t trials = 40;
  std::vector<double> codebook_k;
  /// Explicit symbols; when empty, message_length symbols are drawn from the seed.
  std::vector<int> message;
  std::size_t message_length = 200;
  std::optional<EveParams> eve;
  EveBackend eve_backend = EveBackend::analytic;
  /// Directory for per-symbol count CSVs; empty disables them.
  std::string counts_dir;
};

struct Config {
  Scenario scenario;
  std::uint64_t seed = 1;
  TrajectorySettings trajectories;
  OracleSettings oracle;
  ProtocolSettings protocol;
};

/// Preset defaults; InvalidArgument for unknown names.
Config defaults(const std::string& preset);

/// Overlays a JSON document on cfg. Unknown keys and wrong types are
/// InvalidArgument. A "preset" key must match cfg's preset.
void apply_json(Config& cfg, const nlohmann::json& j);

/// Full configuration, accepted back by apply_json.
nlohmann::ordered_json to_json(const Config& cfg);

/// Runs the command line; returns the process exit code. Errors go to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qsa::cli
