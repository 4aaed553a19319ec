#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "puzzlemeasure/angle.hpp"
#include "puzzlemeasure/dynamics.hpp"

namespace puzzlemeasure {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  int degree = 2;
  Cx c{0.0, 0.0};
  bool has_c = false;
  double g0 = 1.0;
  int max_depth = 10;
  int partition_depth = 8;
  int horizon = 100000;
  int t_max = 20;
  int n_cascade = 10;
  double delta_tol = 1e-4;
  int grid_n = 256;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::vector<std::string> rays;  // "p/q" angles for the ray command
  /// Explicit depth-0 co-landing angle sets, e.g. the cycle at alpha of the last renormalization.
  std::vector<std::vector<std::string>> stars;
  int koebe_branches = 200;
  int transport_triples = 100;
  bool figures = true;
};

/// Reads the known keys of a config object; unknown keys are rejected. Throws kConfig.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json to_json(const RunConfig& config);
/// Throws kConfig for an odd or small degree, a missing c, or non-positive budgets.
void validate(const RunConfig& config);
/// FNV-1a over the canonical JSON of the config without output_dir.
std::string config_hash(const RunConfig& config);

Angle parse_angle(const std::string& text);

/// Each command writes <output_dir>/<name>.json plus its tables and figures, and returns the report.
/// Library errors are rethrown with the failing stage in the message.
nlohmann::json cmd_classify(const RunConfig& config);
nlohmann::json cmd_ray(const RunConfig& config);
nlohmann::json cmd_puzzle(const RunConfig& config);
nlohmann::json cmd_nest(const RunConfig& config);
nlohmann::json cmd_measure(const RunConfig& config);
nlohmann::json cmd_verify(const RunConfig& config);

/// True when every hard check in the report passed.
bool hard_checks_pass(const nlohmann::json& report);

}  // namespace puzzlemeasure
