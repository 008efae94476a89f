#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fincode/coding_engine.hpp"
#include "json.hpp"

namespace fincode {

// Everything a CLI run needs, parsed from one flat JSON object.
struct RunConfig {
  EngineConfig engine;
  std::string mode = "torus";  // torus | lazy
  Vertex target;               // lazy mode: vertex whose output is computed
  std::vector<std::string> verify = {"distribution", "dependence", "equivariance", "audit"};
  std::vector<std::int64_t> radius_r = {8, 16, 32, 64};
  double radius_c = 8.0;
  std::size_t min_samples = 10000;
  std::size_t equivariance_seeds = 100;
  double min_termination = 0.999;
  int cell_stat_levels = 8;
  std::size_t cell_stat_seeds = 1000;
  nlohmann::json raw;
};

// Throws ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

LatticeGraph graph_from_json(const nlohmann::json& j);
ProcessSpec process_from_json(const nlohmann::json& j, int dim);

// Stable 64-bit hash of the canonical JSON text.
std::string config_fingerprint(const nlohmann::json& j);

}  // namespace fincode
