#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fincode/cell_process.hpp"
#include "fincode/coding_engine.hpp"
#include "fincode/graph.hpp"
#include "fincode/process_oracle.hpp"

namespace fincode {

struct TestReport {
  std::string test;
  std::string statistic;
  double value = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  std::size_t n = 0;
  bool pass = false;
  std::string note;  // how the slack was derived, or why the test refused
};

// Output fields of torus runs, one value vector per seed (indexed by
// LatticeGraph::index).
struct SampleBatch {
  const LatticeGraph* graph = nullptr;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<int>> values;
  std::size_t alphabet = 2;

  static SampleBatch from_runs(const LatticeGraph& g, const std::vector<RunResult>& runs, std::size_t alphabet);
  std::size_t size() const { return values.size(); }
};

struct TvOptions {
  bool pool_translates = true;  // average the pattern law over all translates
  std::size_t min_samples = 10000;
};

// Empirical law of a pattern (offsets from a base vertex), codes
// sum_j x_j |S|^(m-1-j).
std::vector<double> empirical_pattern_law(const SampleBatch& b, const std::vector<Vertex>& pattern, bool pool);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

// 3 sqrt(K/n) with K = number of pattern outcomes.
double multinomial_slack(std::size_t outcomes, std::size_t n);

TestReport tv_against_oracle(const SampleBatch& b, const std::vector<Vertex>& pattern, const ProcessOracle& oracle,
                             const TvOptions& opt = {});

// Joint law of U ∪ V against the product of the empirical marginals. Refuses
// (ConfigError) when the fuzzed separation is <= k.
TestReport dependence_test(const SampleBatch& b, const std::vector<Vertex>& U, const std::vector<Vertex>& V,
                           std::int64_t k, const TvOptions& opt = {});

// Patterns of at most three sites used by the distribution suite: on the line
// every subset of {0, 1, 2} containing 0; in 2D the L-shape and the straight
// pieces along each axis.
std::vector<std::vector<Vertex>> window_patterns(int dim);

// Dependence tests for singleton and pair shapes U, V over every translate of
// V whose fuzzed separation from U exceeds k.
std::vector<TestReport> dependence_suite(const SampleBatch& b, std::int64_t k, const TvOptions& opt = {});

struct TailRow {
  std::int64_t r = 0;
  std::size_t count = 0;  // runs with R > r (unresolved runs count as beyond every r)
  double tail = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool pass = false;
};

// Pr(R > r) against c/r with a Wilson (z = 3) slack.
std::vector<TailRow> radius_tail(const std::vector<std::int64_t>& radii, const std::vector<std::int64_t>& rs,
                                 double c = 8.0);
double wilson_lower(double phat, std::size_t n, double z);
double wilson_upper(double phat, std::size_t n, double z);

struct AuditSummary {
  double available_per_site = 0.0;
  double read_per_site = 0.0;
  double margin_se = 0.0;
  std::int64_t conservation_residual = 0;  // sum over runs of |ΣW - ΣM|
  double terminated_fraction = 0.0;
  std::size_t runs = 0;
  std::vector<TestReport> reports;
};

AuditSummary entropy_audit(const std::vector<RunResult>& runs, double min_termination = 0.999);

struct BoundarySample {
  bool occupied = false;  // origin in B
  std::size_t size = 0;   // |C_0|
  std::size_t boundary = 0;
};

// Pr(|∂C_0| >= δ|C_0|) against (d/δ + 1) Pr(0 ∉ B); d is the vertex degree.
TestReport small_boundary_check(const std::vector<BoundarySample>& samples, double delta, int degree);

// Runs the engine on the seed and on randomness pulled back through gamma;
// true iff Z'_{gamma v} = Z_v at every vertex.
bool equivariance_check(const EngineConfig& cfg, const ParameterChoice& params, const ProcessOracle& oracle,
                        std::uint64_t seed, const Automorphism& gamma);

// Automorphisms used by the equivariance suite: unit translations, a
// reflection per axis, and on Z^2 the axis swap.
std::vector<Automorphism> standard_automorphisms(const LatticeGraph& g);

// Cell-process laws on the line with simple_z cells.
TestReport entry_level_law(const std::vector<int>& levels, double tolerance = 0.01);
// One-sided extents of the entry cell given entry level n, pooled over both
// sides, against geometric(2^-n) on {0, 1, ...}.
TestReport extent_law(const std::vector<std::int64_t>& extents, int n, double tolerance = 0.02);

struct StructureCheck {
  std::size_t seeds = 0;
  std::size_t nesting_failures = 0;
  std::size_t finiteness_failures = 0;
  std::size_t separation_failures = 0;
  std::vector<std::string> messages;
};

// Voronoi cells around the origin for levels 1..levels: A_n ⊆ A_{n+1},
// components resolve within the caps, and every A_{n+1} cell is either an
// A_n cell or lies inside a single eroded Voronoi cell of the next raw level.
StructureCheck voronoi_structure_check(const LatticeGraph& g, const CellPolicy& p, int levels,
                                       std::uint64_t first_seed, std::size_t n_seeds, std::int64_t window);

std::string reports_csv(const std::vector<TestReport>& reports);
std::string reports_json(const std::vector<TestReport>& reports);

}  // namespace fincode
