#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fincode/cell_process.hpp"
#include "fincode/graph.hpp"
#include "fincode/process_oracle.hpp"
#include "fincode/randomness.hpp"
#include "fincode/total_order.hpp"

namespace fincode {

enum class BitPolicy { EntropyControlled, LocalUnbounded };
// Deliberate defects used to check that the verification suite notices them.
enum class Mutation { None, SkipConditioning, ReuseBits, IgnoreOrder };

struct EngineConfig {
  LatticeGraph graph = LatticeGraph::torus(1, 24);
  ProcessSpec process = ProcessSpec::and_process();
  CellPolicy cell;
  OrderConfig order;
  BitPolicy policy = BitPolicy::EntropyControlled;
  double eps = 1.0;
  int m = 8;
  std::optional<double> p_override;
  std::optional<double> delta;
  bool auto_shift = true;
  std::int64_t max_time = 100000;
  std::uint64_t seed = 0;
  Mutation mutation = Mutation::None;
  std::size_t chunk_cap = 64;
  int bracket_len = 12;
  std::size_t calibration_samples = 4000;
  bool lazy = false;  // evaluate the factor at single vertices of an infinite lattice
};

struct ParameterChoice {
  EntropyBracket bracket;
  EntropyBudget budget;
  double delta = 0.0;
  int census_length = 0;
  int level_shift = 0;
  double shift_event_rate = 0.0;
  double shift_event_sigma = 0.0;
  double shift_threshold = 0.0;
  std::vector<std::string> flags;  // budget inequalities that do not hold
};

ParameterChoice choose_parameters(const EngineConfig& cfg, const ProcessOracle& oracle);

struct AgentSummary {
  Vertex vertex;
  int level = 0;
  std::size_t fresh = 0;
  std::int64_t bits = 0;
  std::int64_t completed = -1;
  std::size_t chunks = 0;
};

struct RunResult {
  std::uint64_t seed = 0;
  bool terminated = false;
  std::string status = "ok";  // ok | nontermination | unresolved | error
  std::string message;
  std::vector<Vertex> sites;
  std::vector<int> value;
  std::vector<std::int64_t> T;
  std::vector<std::int64_t> bits_read;
  std::vector<std::int64_t> bits_available;  // -1 for the unbounded stream
  std::vector<int> level;
  std::vector<AgentSummary> agents;
  std::vector<std::size_t> stuck;  // indices into agents
  std::int64_t total_W = 0;
  std::int64_t total_M = 0;
  std::int64_t steps = 0;
  std::int64_t label_bits = 0;
  int top_level = 0;
  // Lazy mode: the vertex whose output was produced.
  std::int64_t radius = -1;
  std::size_t target = 0;
};

std::uint64_t run_seed(std::uint64_t master, std::uint64_t replica);

// Whole finite torus. With gamma set, all randomness is pulled back through
// gamma^{-1}, so an equivariant engine yields Z'_{gamma v} = Z_v.
RunResult run_torus(const EngineConfig& cfg, const ParameterChoice& params, const ProcessOracle& oracle,
                    std::uint64_t seed, const Automorphism* gamma = nullptr);

// Lazy evaluation of the output at one vertex of Z^d (local_unbounded bits).
RunResult run_lazy(const EngineConfig& cfg, const ParameterChoice& params, const ProcessOracle& oracle,
                   std::uint64_t seed, const Vertex& target);

// Agents' fresh parts split into chunks (serialization order inside).
std::vector<std::vector<std::size_t>> chunk_fresh_part(const LatticeGraph& g, const std::vector<Vertex>& sites,
                                                       const std::vector<std::size_t>& fresh_in_order,
                                                       std::size_t chunk_size);

std::string to_string(Mutation m);
std::string to_string(BitPolicy p);

}  // namespace fincode
