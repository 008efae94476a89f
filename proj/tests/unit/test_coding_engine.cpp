#include <cmath>

#include "doctest.h"
#include "fincode/coding_engine.hpp"
#include "fincode/errors.hpp"
#include "fincode/replicas.hpp"
#include "fincode/verification.hpp"

using namespace fincode;

namespace {

EngineConfig and_config(int n = 24) {
  EngineConfig c;
  c.graph = LatticeGraph::torus(1, n);
  c.process = ProcessSpec::and_process();
  c.eps = 1.0;
  c.m = 5;
  return c;
}

bool same_run(const RunResult& a, const RunResult& b) {
  return a.value == b.value && a.T == b.T && a.bits_read == b.bits_read && a.total_W == b.total_W &&
         a.steps == b.steps && a.status == b.status;
}

}  // namespace

TEST_CASE("runs are a function of the seed") {
  auto cfg = and_config();
  ProcessOracle oracle(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, oracle);
  CHECK(params.flags.empty());
  auto a = run_torus(cfg, params, oracle, 12);
  auto b = run_torus(cfg, params, oracle, 12);
  REQUIRE(a.terminated);
  CHECK(same_run(a, b));
  CHECK_FALSE(same_run(a, run_torus(cfg, params, oracle, 13)));
}

TEST_CASE("double-entry bit accounting and read capacity") {
  auto cfg = and_config();
  ProcessOracle oracle(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, oracle);
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto r = run_torus(cfg, params, oracle, s);
    REQUIRE(r.terminated);
    CHECK(r.total_W == r.total_M);
    std::int64_t read = 0;
    for (std::size_t i = 0; i < r.sites.size(); ++i) {
      CHECK(r.bits_read[i] <= r.bits_available[i]);
      read += r.bits_read[i];
    }
    CHECK(read == r.total_M);
    std::int64_t used = 0;
    for (const auto& a : r.agents) used += a.bits;
    CHECK(used == r.total_W);
    for (std::size_t i = 0; i < r.sites.size(); ++i) {
      CHECK(r.value[i] >= 0);
      CHECK(r.T[i] >= 0);
    }
  }
}

TEST_CASE("a point-mass target reads no bits") {
  auto cfg = and_config(12);
  cfg.process = ProcessSpec::iid({"a", "b"}, {0, 1});
  ProcessOracle oracle(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, oracle);
  auto r = run_torus(cfg, params, oracle, 4);
  REQUIRE(r.terminated);
  CHECK(r.total_M == 0);
  for (int v : r.value) CHECK(v == 1);
}

TEST_CASE("equivariance on small tori") {
  for (auto cfg : {and_config(12), and_config(24)}) {
    ProcessOracle oracle(cfg.process, cfg.graph);
    auto params = choose_parameters(cfg, oracle);
    for (const auto& gamma : standard_automorphisms(cfg.graph))
      for (std::uint64_t s = 0; s < 10; ++s) CHECK(equivariance_check(cfg, params, oracle, s, gamma));
  }
  auto cfg = and_config();
  cfg.graph = LatticeGraph::torus(2, 6);
  cfg.process = ProcessSpec::iid({"0", "1", "2"}, {1, 1, 2}, 2);
  cfg.m = 8;
  cfg.cell.kind = CellPolicy::Kind::Voronoi;
  ProcessOracle oracle(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, oracle);
  for (const auto& gamma : standard_automorphisms(cfg.graph))
    for (std::uint64_t s = 0; s < 3; ++s) CHECK(equivariance_check(cfg, params, oracle, s, gamma));
}

TEST_CASE("fresh parts split into local chunks") {
  auto g = LatticeGraph::torus(1, 40);
  std::vector<Vertex> sites = g.all_vertices();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < 40; ++i) order.push_back((i * 17) % 40);
  auto chunks = chunk_fresh_part(g, sites, order, 6);
  std::vector<std::size_t> seen;
  for (const auto& c : chunks) {
    CHECK(c.size() <= 6);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      auto pa = std::find(order.begin(), order.end(), c[i]) - order.begin();
      auto pb = std::find(order.begin(), order.end(), c[i + 1]) - order.begin();
      CHECK(pa < pb);
    }
    seen.insert(seen.end(), c.begin(), c.end());
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen.size() == 40);
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  // the first chunk grows around the earliest site
  for (auto s : chunks.front()) CHECK(g.distance(sites[order.front()], sites[s]) <= 3);
}

TEST_CASE("budget below the entropy rate is flagged and stalls") {
  auto cfg = and_config();
  cfg.p_override = 0.05;
  cfg.max_time = 2000;
  ProcessOracle oracle(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, oracle);
  CHECK(std::find(params.flags.begin(), params.flags.end(), "budget_mean_not_above_h_plus_3eps") != params.flags.end());
  auto r = run_torus(cfg, params, oracle, 1);
  CHECK_FALSE(r.terminated);
  CHECK(r.status == "nontermination");
  CHECK_FALSE(r.stuck.empty());
}

TEST_CASE("fuzz below the dependence range is refused") {
  auto cfg = and_config();
  std::vector<int> map(8);
  for (int i = 0; i < 8; ++i) map[i] = (i == 7);
  cfg.process = ProcessSpec::block_factor({"0", "1"}, {"0", "1"}, {1, 1}, {Vertex(0), Vertex(1), Vertex(2)}, map);
  ProcessOracle oracle(cfg.process, cfg.graph);
  CHECK_THROWS_AS(choose_parameters(cfg, oracle), ConfigError);
  cfg.graph = LatticeGraph::torus(1, 24, 2);
  ProcessOracle fuzzed(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, fuzzed);
  CHECK(run_torus(cfg, params, fuzzed, 0).terminated);
}

TEST_CASE("mutations leave fingerprints") {
  auto cfg = and_config();
  ProcessOracle oracle(cfg.process, cfg.graph);
  SUBCASE("reused bits break conservation") {
    cfg.mutation = Mutation::ReuseBits;
    auto params = choose_parameters(cfg, oracle);
    auto r = run_torus(cfg, params, oracle, 3);
    CHECK(r.total_W != r.total_M);
  }
  SUBCASE("coordinate order breaks equivariance") {
    cfg.mutation = Mutation::IgnoreOrder;
    auto params = choose_parameters(cfg, oracle);
    int broken = 0;
    for (std::uint64_t s = 0; s < 20; ++s)
      broken += !equivariance_check(cfg, params, oracle, s, Automorphism::reflection(cfg.graph, 0));
    CHECK(broken > 0);
  }
  SUBCASE("dropped conditioning decouples neighbours") {
    cfg.mutation = Mutation::SkipConditioning;
    auto params = choose_parameters(cfg, oracle);
    std::vector<RunResult> runs;
    for (std::uint64_t s = 0; s < 1500; ++s) runs.push_back(run_torus(cfg, params, oracle, s));
    auto batch = SampleBatch::from_runs(cfg.graph, runs, 2);
    auto law = empirical_pattern_law(batch, {Vertex(0), Vertex(1)}, true);
    CHECK(law[3] == doctest::Approx(1.0 / 16).epsilon(0.1));
  }
}

TEST_CASE("lazy evaluation on the line") {
  EngineConfig cfg;
  cfg.graph = LatticeGraph::line();
  cfg.process = ProcessSpec::and_process();
  cfg.policy = BitPolicy::LocalUnbounded;
  cfg.lazy = true;
  ProcessOracle oracle(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, oracle);
  CHECK(params.level_shift == 0);
  int ones = 0;
  const int n = 4000;
  for (int s = 0; s < n; ++s) {
    auto r = run_lazy(cfg, params, oracle, static_cast<std::uint64_t>(s), Vertex(0));
    REQUIRE(r.terminated);
    CHECK(r.radius >= 0);
    CHECK(r.sites[r.target] == Vertex(0));
    ones += r.value[r.target];
    auto again = run_lazy(cfg, params, oracle, static_cast<std::uint64_t>(s), Vertex(0));
    CHECK(again.value[again.target] == r.value[r.target]);
  }
  CHECK(std::abs(ones / double(n) - 0.25) < 4 * std::sqrt(0.25 * 0.75 / n));
  cfg.policy = BitPolicy::EntropyControlled;
  CHECK_THROWS_AS(run_lazy(cfg, params, oracle, 0, Vertex(0)), ConfigError);
}

TEST_CASE("replica loops: parallel equals serial") {
  auto cfg = and_config();
  ProcessOracle oracle(cfg.process, cfg.graph);
  auto params = choose_parameters(cfg, oracle);
  std::function<RunResult(std::uint64_t)> fn = [&](std::uint64_t s) { return run_torus(cfg, params, oracle, s); };
  auto seeds = seed_range(100, 163);
  auto a = map_seeds_serial<RunResult>(seeds, fn);
  auto b = map_seeds_parallel<RunResult>(seeds, fn, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_run(a[i], b[i]));
  CHECK(seed_range(5, 5).size() == 1);
}
