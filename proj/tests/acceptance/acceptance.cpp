// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fincode/coding_engine.hpp"
#include "fincode/errors.hpp"
#include "fincode/ky_sampler.hpp"
#include "fincode/replicas.hpp"
#include "fincode/verification.hpp"

using namespace fincode;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void progress(const std::string& msg) {
  std::fprintf(stderr, "[acceptance] %s\n", msg.c_str());
  std::fflush(stderr);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Bit ledger checks shared by every unmutated torus run.
struct Ledger {
  std::size_t runs = 0;
  std::size_t unbalanced = 0;
  std::size_t over_capacity = 0;
  std::size_t thrown = 0;
  std::vector<std::string> messages;

  void add(const RunResult& r) {
    ++runs;
    if (r.status == "error") {
      ++thrown;
      if (messages.size() < 3) messages.push_back("seed " + std::to_string(r.seed) + ": " + r.message);
      return;
    }
    if (r.total_W != r.total_M) ++unbalanced;
    for (std::size_t i = 0; i < r.bits_read.size(); ++i)
      if (r.bits_available[i] >= 0 && r.bits_read[i] > r.bits_available[i]) {
        ++over_capacity;
        break;
      }
  }
};

Ledger g_ledger;

struct Prepared {
  EngineConfig cfg;
  std::unique_ptr<ProcessOracle> oracle;
  ParameterChoice params;
};

Prepared prepare(EngineConfig cfg) {
  Prepared p;
  p.cfg = std::move(cfg);
  p.oracle = std::make_unique<ProcessOracle>(p.cfg.process, p.cfg.graph);
  p.params = choose_parameters(p.cfg, *p.oracle);
  return p;
}

// Invariant violations become failed runs so that one bad seed is reported
// rather than aborting the whole batch.
std::vector<RunResult> run_batch(const Prepared& p, std::uint64_t first, std::size_t n) {
  std::function<RunResult(std::uint64_t)> fn = [&](std::uint64_t seed) {
    try {
      return run_torus(p.cfg, p.params, *p.oracle, seed);
    } catch (const InvariantViolation& e) {
      RunResult r;
      r.seed = seed;
      r.status = "error";
      r.message = e.what();
      return r;
    }
  };
  return map_seeds<RunResult>(seed_range(first, first + n - 1), fn, jobs());
}

EngineConfig and_torus() {
  EngineConfig c;
  c.graph = LatticeGraph::torus(1, 24);
  c.process = ProcessSpec::and_process();
  c.eps = 1.0;
  c.m = 5;
  c.seed = 2024;
  return c;
}

std::size_t count_failed(const std::vector<TestReport>& rs) {
  return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [](const TestReport& r) { return !r.pass; }));
}

double worst_ratio(const std::vector<TestReport>& rs) {
  double w = 0;
  for (const auto& r : rs) w = std::max(w, r.value / std::max(r.bound + r.slack, 1e-300));
  return w;
}

// Shared by criteria 1, 2 and 9: the verify suites on a torus batch.
std::vector<TestReport> verify_suite(const Prepared& p, const std::vector<RunResult>& runs, bool with_equivariance) {
  std::vector<TestReport> out;
  auto batch = SampleBatch::from_runs(p.cfg.graph, runs, p.cfg.process.alphabet.size());
  TvOptions opt;
  for (const auto& pat : window_patterns(p.cfg.graph.dim())) out.push_back(tv_against_oracle(batch, pat, *p.oracle, opt));
  const std::int64_t range = p.oracle->dependence_range(false);
  const std::int64_t k = (range + p.cfg.graph.fuzz() - 1) / p.cfg.graph.fuzz();
  auto dep = dependence_suite(batch, k, opt);
  out.insert(out.end(), dep.begin(), dep.end());
  if (with_equivariance) {
    for (const auto& gamma : standard_automorphisms(p.cfg.graph)) {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < 100; ++i)
        if (!equivariance_check(p.cfg, p.params, *p.oracle, runs[i].seed, gamma)) ++bad;
      TestReport t;
      t.test = "equivariance";
      t.statistic = gamma.describe();
      t.value = static_cast<double>(bad);
      t.n = 100;
      t.pass = bad == 0;
      out.push_back(t);
    }
  }
  auto audit = entropy_audit(runs);
  out.insert(out.end(), audit.reports.begin(), audit.reports.end());
  return out;
}

std::size_t terminated(const std::vector<RunResult>& runs) {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.terminated; }));
}

constexpr std::size_t kSeeds = 100000;

Prepared* g_and = nullptr;
std::vector<RunResult>* g_and_runs = nullptr;

Outcome criterion_distribution() {
  static Prepared p = prepare(and_torus());
  static std::vector<RunResult> runs = run_batch(p, 1, kSeeds);
  g_and = &p;
  g_and_runs = &runs;
  for (const auto& r : runs) g_ledger.add(r);
  auto batch = SampleBatch::from_runs(p.cfg.graph, runs, 2);
  std::vector<TestReport> reps;
  for (const auto& pat : window_patterns(1)) reps.push_back(tv_against_oracle(batch, pat, *p.oracle));
  Outcome o;
  o.pass = batch.size() == kSeeds && count_failed(reps) == 0;
  std::string worst;
  for (const auto& r : reps) worst += " [" + r.statistic + "] tv=" + fmt("%.4f", r.value) + "/" + fmt("%.4f", r.slack);
  o.detail = std::to_string(batch.size()) + " of " + std::to_string(kSeeds) + " seeds terminated;" + worst;
  return o;
}

Outcome criterion_dependence() {
  auto batch = SampleBatch::from_runs(g_and->cfg.graph, *g_and_runs, 2);
  auto reps = dependence_suite(batch, 1);
  Outcome o;
  o.pass = !reps.empty() && count_failed(reps) == 0;
  o.detail = std::to_string(reps.size()) + " singleton/pair tests at fuzzed distance >= 2, " +
             std::to_string(count_failed(reps)) + " failed, worst value/slack " + fmt("%.3f", worst_ratio(reps));
  return o;
}

Outcome criterion_equivariance() {
  std::size_t checks = 0, bad = 0;
  auto sweep = [&](const Prepared& p, std::vector<Automorphism> gammas) {
    for (const auto& gamma : gammas)
      for (std::uint64_t s = 0; s < 100; ++s) {
        ++checks;
        if (!equivariance_check(p.cfg, p.params, *p.oracle, s, gamma)) ++bad;
      }
  };
  const auto& line = g_and->cfg.graph;
  auto gl = standard_automorphisms(line);
  gl.push_back(Automorphism::translation(line, Vertex(7)));
  gl.push_back(Automorphism::translation(line, Vertex(5)).then(Automorphism::reflection(line, 0)));
  sweep(*g_and, gl);

  EngineConfig c;
  c.graph = LatticeGraph::torus(2, 12);
  c.process = ProcessSpec::iid({"0", "1", "2"}, {1, 1, 2}, 2);
  c.cell.kind = CellPolicy::Kind::Voronoi;
  c.eps = 1.0;
  c.m = 8;
  c.seed = 7;
  auto p2 = prepare(c);
  const auto& sq = p2.cfg.graph;
  auto gs = standard_automorphisms(sq);
  gs.push_back(Automorphism::translation(sq, Vertex(5, 9)));
  gs.push_back(Automorphism::axis_permutation(sq, {1, 0}).then(Automorphism::reflection(sq, 0)));
  sweep(p2, gs);
  Outcome o;
  o.pass = bad == 0 && checks > 0;
  o.detail = std::to_string(checks) + " (seed, automorphism) pairs on Z_24 and Z_12^2, " + std::to_string(bad) +
             " mismatches";
  return o;
}

Outcome criterion_radius() {
  EngineConfig c;
  c.graph = LatticeGraph::line();
  c.process = ProcessSpec::and_process();
  c.policy = BitPolicy::LocalUnbounded;
  c.lazy = true;
  c.seed = 99;
  auto p = prepare(c);
  std::function<std::int64_t(std::uint64_t)> fn = [&](std::uint64_t s) -> std::int64_t {
    try {
      auto r = run_lazy(p.cfg, p.params, *p.oracle, s, Vertex(0));
      return r.terminated ? r.radius : -1;
    } catch (const UnresolvedError&) {
      return -1;
    }
  };
  auto radii = map_seeds<std::int64_t>(seed_range(1, kSeeds), fn, jobs());
  auto rows = radius_tail(radii, {8, 16, 32, 64}, 8.0);
  Outcome o;
  o.pass = true;
  for (const auto& row : rows) {
    o.pass = o.pass && row.pass;
    o.detail += "P(R>" + std::to_string(row.r) + ")=" + fmt("%.4f", row.tail) + " vs " + fmt("%.4f", row.bound) + "; ";
  }
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) o.pass = o.pass && rows[i].tail >= rows[i + 1].tail;
  o.detail += std::to_string(radii.size()) + " replicas";
  return o;
}

Outcome criterion_sampler() {
  std::mt19937_64 rng(20240601);
  std::size_t failures = 0, dyadic = 0;
  double worst_margin = 1e9;
  std::vector<std::string> notes;
  for (int dist = 0; dist < 20; ++dist) {
    const std::size_t k = 1 + rng() % 16;
    TargetDistribution d = TargetDistribution::from_rationals({1}, 1);
    bool is_dyadic = dist % 4 == 0;
    if (is_dyadic) {
      // numerators over 2^L with L <= 12
      const int L = 1 + static_cast<int>(rng() % 12);
      std::vector<std::uint64_t> num(k, 0);
      for (std::uint64_t unit = 0; unit < (1ULL << L); ++unit) num[rng() % k]++;
      d = TargetDistribution::from_rationals(num, 1ULL << L);
      ++dyadic;
      // exact: every string of length L lands on outcome i exactly num[i] times
      std::vector<std::uint64_t> hits(k, 0);
      for (std::uint64_t s = 0; s < (1ULL << L); ++s) {
        DdgSimulation sim(d);
        for (int j = L - 1; j >= 0 && !sim.halted(); --j) sim.feed((s >> j) & 1);
        if (!sim.halted()) {
          ++failures;
          notes.push_back("dyadic walk did not halt by depth L");
          break;
        }
        hits[sim.output()]++;
      }
      if (hits != num) {
        ++failures;
        notes.push_back("dyadic law not reproduced exactly");
      }
    } else {
      std::vector<double> p(k);
      double sum = 0;
      for (auto& x : p) sum += (x = std::exponential_distribution<double>(1.0)(rng));
      for (auto& x : p) x /= sum;
      d = TargetDistribution::from_doubles(p);
    }
    // 10^5 draws
    const std::size_t n = 100000;
    std::vector<double> counts(k, 0);
    double mean = 0, m2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto s = ky_sample(d, [&] { return static_cast<bool>(rng() & 1); });
      counts[s.outcome] += 1;
      double b = static_cast<double>(s.bits);
      double delta = b - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (b - mean);
    }
    double se = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    double H = d.entropy();
    double margin = H + 2 + 3 * se - mean;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0) {
      ++failures;
      notes.push_back("mean bits " + fmt("%.4f", mean) + " above H+2+3se");
    }
    std::vector<double> emp(k), exact(k);
    for (std::size_t i = 0; i < k; ++i) {
      emp[i] = counts[i] / static_cast<double>(n);
      exact[i] = d.probability(i);
    }
    if (total_variation(emp, exact) > multinomial_slack(k, n)) {
      ++failures;
      notes.push_back("output law outside multinomial slack");
    }
    // replay: 100 continuations after the consumed prefix
    for (int c = 0; c < 100; ++c) {
      std::vector<bool> bits;
      auto s = ky_sample(d, [&] {
        bits.push_back(rng() & 1);
        return static_cast<bool>(bits.back());
      });
      std::size_t pos = 0;
      auto t = ky_sample(d, [&] { return pos < bits.size() ? static_cast<bool>(bits[pos++]) : static_cast<bool>(rng() & 1); });
      DdgSimulation sim(d);
      for (std::size_t j = 0; j < s.bits; ++j) sim.feed(bits[j]);
      if (t.outcome != s.outcome || t.bits != s.bits || !sim.halted() || sim.output() != s.outcome) {
        ++failures;
        notes.push_back("replay mismatch");
        break;
      }
    }
  }
  Outcome o;
  o.pass = failures == 0;
  o.detail = "20 distributions (" + std::to_string(dyadic) + " dyadic), 1e5 draws each; min (H+2+3se - mean bits) = " +
             fmt("%.4f", worst_margin);
  if (!notes.empty()) o.detail += "; " + notes.front();
  return o;
}

Prepared* g_audit = nullptr;
std::vector<RunResult>* g_audit_runs = nullptr;

Outcome criterion_audit() {
  EngineConfig c = and_torus();
  c.graph = LatticeGraph::torus(1, 2048);
  c.eps = 0.2;
  c.m = 50;
  c.seed = 11;
  static Prepared p = prepare(c);
  static std::vector<RunResult> runs = run_batch(p, 1, 10000);
  for (const auto& r : runs) g_ledger.add(r);
  auto a = entropy_audit(runs, 0.999);
  Outcome o;
  o.pass = p.params.flags.empty();
  for (const auto& r : a.reports)
    if (r.statistic == "read_bits_per_site" || r.statistic == "terminated_fraction") o.pass = o.pass && r.pass;
  o.detail = "read " + fmt("%.4f", a.read_per_site) + " < available " + fmt("%.4f", a.available_per_site) +
             " bits/site (3se " + fmt("%.4f", 3 * a.margin_se) + "), terminated " + fmt("%.4f", a.terminated_fraction) +
             " of 10^4 on Z_2048";
  for (const auto& f : p.params.flags) o.detail += ", flag " + f;
  return o;
}

Outcome criterion_conservation() {
  Outcome o;
  o.pass = g_ledger.runs > 0 && g_ledger.unbalanced == 0 && g_ledger.over_capacity == 0 && g_ledger.thrown == 0;
  o.detail = std::to_string(g_ledger.runs) + " torus runs: " + std::to_string(g_ledger.unbalanced) +
             " with sum|W| != sum M, " + std::to_string(g_ledger.over_capacity) + " reading past their word, " +
             std::to_string(g_ledger.thrown) + " invariant exceptions";
  if (!g_ledger.messages.empty()) o.detail += " (" + g_ledger.messages.front() + ")";
  return o;
}

Outcome criterion_cells() {
  Outcome o;
  o.pass = true;
  // simple_z on the line, pooled over four far-apart vertices per seed
  auto line = LatticeGraph::line();
  const std::vector<Vertex> spots = {Vertex(0), Vertex(1000000), Vertex(2000000), Vertex(3000000)};
  std::vector<int> levels;
  std::map<int, std::vector<std::int64_t>> extents;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    RandomField f(line, s);
    CellProcessView cells(line, f, CellPolicy{});
    for (const auto& v : spots) {
      int n = cells.entry_level(v);
      levels.push_back(n);
      if (n > 3) continue;
      const auto& c = cells.component(v, n);
      extents[n].push_back(c.back()[0] - v[0]);
      extents[n].push_back(v[0] - c.front()[0]);
    }
  }
  auto lv = entry_level_law(levels, 0.01);
  o.pass = o.pass && lv.pass;
  o.detail = "entry-level TV " + fmt("%.4f", lv.value);
  for (int n = 1; n <= 3; ++n) {
    auto ex = extent_law(extents[n], n, 0.02);
    o.pass = o.pass && ex.pass;
    o.detail += ", extent|N=" + std::to_string(n) + " TV " + fmt("%.4f", ex.value);
  }
  // Voronoi cells on Z^2
  auto sq = LatticeGraph::lattice(2);
  CellPolicy vp;
  vp.kind = CellPolicy::Kind::Voronoi;
  vp.eps = 0.5;
  auto sc = voronoi_structure_check(sq, vp, 6, 1, 1000, 6);
  bool structure = sc.nesting_failures == 0 && sc.finiteness_failures == 0 && sc.separation_failures == 0;
  o.pass = o.pass && structure;
  o.detail += "; Voronoi 10^3 seeds: " + std::to_string(sc.nesting_failures) + "/" +
              std::to_string(sc.finiteness_failures) + "/" + std::to_string(sc.separation_failures) +
              " nesting/finiteness/separation failures";
  std::size_t boundary_tests = 0, boundary_failed = 0;
  for (int n = 2; n <= 6; n += 2) {
    std::vector<BoundarySample> samples;
    for (std::uint64_t s = 1; s <= 2000; ++s) {
      RandomField f(sq, s);
      CellProcessView cells(sq, f, vp);
      BoundarySample b;
      b.occupied = cells.in_level(sq.origin(), n);
      if (b.occupied) {
        const auto& c = cells.component(sq.origin(), n);
        b.size = c.size();
        b.boundary = static_cast<std::size_t>(edge_boundary_size(sq, c));
      }
      samples.push_back(b);
    }
    for (double delta : {0.5, 1.0, 2.0}) {
      ++boundary_tests;
      if (!small_boundary_check(samples, delta, sq.degree()).pass) ++boundary_failed;
    }
  }
  o.pass = o.pass && boundary_failed == 0;
  o.detail += "; small-boundary bound " + std::to_string(boundary_tests - boundary_failed) + "/" +
              std::to_string(boundary_tests) + " (levels 2,4,6 x delta 0.5,1,2)";
  return o;
}

Outcome criterion_mutations() {
  Outcome o;
  o.pass = true;
  for (auto m : {Mutation::SkipConditioning, Mutation::ReuseBits, Mutation::IgnoreOrder}) {
    EngineConfig c = and_torus();
    c.mutation = m;
    auto p = prepare(c);
    auto runs = run_batch(p, 1, kSeeds);
    std::vector<TestReport> reps;
    std::string caught;
    try {
      reps = verify_suite(p, runs, true);
    } catch (const Error& e) {
      caught = e.what();
    }
    std::size_t failed = count_failed(reps);
    std::string first;
    for (const auto& r : reps)
      if (!r.pass) {
        first = r.test + " " + r.statistic;
        break;
      }
    bool detected = failed > 0 || !caught.empty();
    o.pass = o.pass && detected;
    o.detail += to_string(m) + ": " + std::to_string(failed) + " failing tests";
    if (!first.empty()) o.detail += " (first: " + first + ")";
    if (!caught.empty()) o.detail += " (suite refused: " + caught + ")";
    o.detail += "; ";
  }
  // control: the unmutated engine passes the same suites
  auto control = verify_suite(*g_and, *g_and_runs, true);
  o.pass = o.pass && count_failed(control) == 0;
  o.detail += "unmutated control: " + std::to_string(count_failed(control)) + " failing of " +
              std::to_string(control.size());
  return o;
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  // Criterion 6 aggregates the ledgers of the torus runs made by 1 and 7, so
  // it runs after them.
  std::vector<Item> items = {
      {1, "distribution correctness", criterion_distribution},
      {2, "k-dependence preservation", criterion_dependence},
      {3, "exact equivariance", criterion_equivariance},
      {4, "coding-radius tail", criterion_radius},
      {5, "sampler efficiency", criterion_sampler},
      {7, "entropy audit", criterion_audit},
      {6, "conservation identities", criterion_conservation},
      {8, "cell-process laws", criterion_cells},
      {9, "mutation sensitivity", criterion_mutations},
  };
  std::map<int, std::string> lines;
  bool all = true;
  for (auto& it : items) {
    auto t0 = std::chrono::steady_clock::now();
    progress("criterion " + std::to_string(it.id) + ": " + it.name);
    Outcome o;
    try {
      o = it.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    std::ostringstream line;
    line << "CRITERION " << it.id << " " << (o.pass ? "PASS" : "FAIL") << " " << it.name << ": " << o.detail << " ["
         << fmt("%.0f", dt) << "s]";
    lines[it.id] = line.str();
    progress(line.str());
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%s\n", all ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL");
  return all ? 0 : 1;
}
