#include "fincode/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <limits>

#include "json.hpp"

#include "fincode/errors.hpp"

namespace fincode {

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

// Vertex indices of every translate of a pattern (one row per base vertex).
std::vector<std::vector<std::size_t>> translate_table(const LatticeGraph& g, const std::vector<Vertex>& pattern,
                                                      bool pool) {
  std::vector<std::vector<std::size_t>> rows;
  const std::size_t n = pool ? g.vertex_count() : 1;
  for (std::size_t t = 0; t < n; ++t) {
    Vertex base = pool ? g.vertex_at(t) : g.origin();
    std::vector<std::size_t> row;
    for (const auto& o : pattern) row.push_back(g.index(g.shifted(base, o)));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::int64_t separation(const LatticeGraph& g, const std::vector<Vertex>& U, const std::vector<Vertex>& V) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& u : U)
    for (const auto& v : V) best = std::min(best, g.distance(u, v));
  return best;
}

std::string fmt_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

SampleBatch SampleBatch::from_runs(const LatticeGraph& g, const std::vector<RunResult>& runs, std::size_t alphabet) {
  SampleBatch b;
  b.graph = &g;
  b.alphabet = alphabet;
  for (const auto& r : runs) {
    if (!r.terminated) continue;
    b.seeds.push_back(r.seed);
    b.values.push_back(r.value);
  }
  return b;
}

std::vector<double> empirical_pattern_law(const SampleBatch& b, const std::vector<Vertex>& pattern, bool pool) {
  if (!b.graph || !b.graph->finite()) throw ConfigError("pattern laws need samples on a finite graph");
  const std::size_t S = b.alphabet;
  const std::size_t K = ipow(S, pattern.size());
  auto rows = translate_table(*b.graph, pattern, pool);
  std::vector<double> law(K, 0.0);
  if (b.values.empty()) return law;
  const double w = 1.0 / static_cast<double>(rows.size() * b.values.size());
  for (const auto& vals : b.values) {
    for (const auto& row : rows) {
      std::size_t code = 0;
      for (auto i : row) {
        int x = vals[i];
        if (x < 0 || static_cast<std::size_t>(x) >= S) throw ConfigError("sample value outside the alphabet");
        code = code * S + static_cast<std::size_t>(x);
      }
      law[code] += w;
    }
  }
  return law;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ConfigError("laws on different outcome spaces");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

double multinomial_slack(std::size_t outcomes, std::size_t n) {
  return 3.0 * std::sqrt(static_cast<double>(outcomes) / static_cast<double>(n));
}

TestReport tv_against_oracle(const SampleBatch& b, const std::vector<Vertex>& pattern, const ProcessOracle& oracle,
                             const TvOptions& opt) {
  if (b.size() < opt.min_samples)
    throw ConfigError("tv test needs at least " + std::to_string(opt.min_samples) + " samples, got " +
                      std::to_string(b.size()));
  const std::size_t S = b.alphabet;
  const std::size_t K = ipow(S, pattern.size());
  if (K > (1u << 16)) throw CapacityError("pattern has too many outcomes");
  ConditionalQuery q;
  for (const auto& o : pattern) q.sample.push_back(b.graph->canonical(o));
  Law law = oracle.conditional(q);
  std::vector<double> exact(K, 0.0);
  for (std::size_t i = 0; i < law.outcomes.size(); ++i) {
    std::size_t code = 0;
    for (int x : law.outcomes[i]) code = code * S + static_cast<std::size_t>(x);
    exact[code] += law.probabilities[i];
  }
  auto emp = empirical_pattern_law(b, pattern, opt.pool_translates);
  TestReport r;
  r.test = "tv_against_oracle";
  std::string name = "pattern";
  for (const auto& o : pattern) name += " " + format_vertex(o, b.graph->dim());
  r.statistic = name;
  r.value = total_variation(emp, exact);
  r.bound = 0.0;
  r.slack = multinomial_slack(K, b.size());
  r.n = b.size();
  r.pass = r.value <= r.bound + r.slack;
  r.note = "slack 3*sqrt(K/n), K=" + std::to_string(K) + (opt.pool_translates ? ", translates pooled" : "");
  return r;
}

TestReport dependence_test(const SampleBatch& b, const std::vector<Vertex>& U, const std::vector<Vertex>& V,
                           std::int64_t k, const TvOptions& opt) {
  const auto& g = *b.graph;
  std::int64_t sep = separation(g, U, V);
  if (sep <= k)
    throw ConfigError("dependence test inapplicable: separation " + std::to_string(sep) + " <= k=" + std::to_string(k));
  if (b.size() < opt.min_samples)
    throw ConfigError("dependence test needs at least " + std::to_string(opt.min_samples) + " samples");
  const std::size_t S = b.alphabet;
  std::vector<Vertex> joint = U;
  joint.insert(joint.end(), V.begin(), V.end());
  auto pj = empirical_pattern_law(b, joint, opt.pool_translates);
  auto pu = empirical_pattern_law(b, U, opt.pool_translates);
  auto pv = empirical_pattern_law(b, V, opt.pool_translates);
  const std::size_t KV = ipow(S, V.size());
  std::vector<double> prod(pj.size());
  for (std::size_t c = 0; c < pj.size(); ++c) prod[c] = pu[c / KV] * pv[c % KV];
  TestReport r;
  r.test = "dependence";
  std::string name = "U";
  for (const auto& o : U) name += " " + format_vertex(o, g.dim());
  name += " V";
  for (const auto& o : V) name += " " + format_vertex(o, g.dim());
  r.statistic = name + " sep " + std::to_string(sep);
  r.value = total_variation(pj, prod);
  r.slack = multinomial_slack(pj.size(), b.size());
  r.n = b.size();
  r.pass = r.value <= r.slack;
  r.note = "joint vs product of empirical marginals; slack 3*sqrt(K/n), K=" + std::to_string(pj.size());
  return r;
}

double wilson_lower(double phat, std::size_t n, double z) {
  const double nn = static_cast<double>(n);
  const double den = 1 + z * z / nn;
  const double centre = phat + z * z / (2 * nn);
  const double half = z * std::sqrt(phat * (1 - phat) / nn + z * z / (4 * nn * nn));
  return std::max(0.0, (centre - half) / den);
}

double wilson_upper(double phat, std::size_t n, double z) {
  const double nn = static_cast<double>(n);
  const double den = 1 + z * z / nn;
  const double centre = phat + z * z / (2 * nn);
  const double half = z * std::sqrt(phat * (1 - phat) / nn + z * z / (4 * nn * nn));
  return std::min(1.0, (centre + half) / den);
}

std::vector<TailRow> radius_tail(const std::vector<std::int64_t>& radii, const std::vector<std::int64_t>& rs, double c) {
  if (radii.empty()) throw ConfigError("radius tail needs at least one replica");
  std::vector<std::int64_t> sorted = rs;
  std::sort(sorted.begin(), sorted.end());
  std::vector<TailRow> rows;
  const std::size_t n = radii.size();
  for (auto r : sorted) {
    TailRow row;
    row.r = r;
    for (auto x : radii)
      if (x < 0 || x > r) ++row.count;
    row.tail = static_cast<double>(row.count) / static_cast<double>(n);
    row.bound = std::min(1.0, c / static_cast<double>(r));
    // The tail is consistent with the bound when the z=3 Wilson interval
    // reaches it.
    row.slack = row.tail - wilson_lower(row.tail, n, 3.0);
    row.pass = row.tail - row.slack <= row.bound;
    rows.push_back(row);
  }
  return rows;
}

AuditSummary entropy_audit(const std::vector<RunResult>& runs, double min_termination) {
  AuditSummary a;
  a.runs = runs.size();
  if (runs.empty()) throw ConfigError("entropy audit needs runs");
  std::vector<double> diff;
  double avail = 0, read = 0, term = 0;
  std::int64_t over_capacity = 0;
  for (const auto& r : runs) {
    if (r.bits_available.empty()) throw ConfigError("entropy audit: run without bit ledgers");
    double sa = 0, sr = 0;
    for (std::size_t i = 0; i < r.bits_available.size(); ++i) {
      if (r.bits_available[i] < 0) throw ConfigError("entropy audit applies to entropy_controlled runs only");
      sa += static_cast<double>(r.bits_available[i]);
      sr += static_cast<double>(r.bits_read[i]);
      if (r.bits_read[i] > r.bits_available[i]) ++over_capacity;
    }
    const double N = static_cast<double>(r.bits_available.size());
    avail += sa / N;
    read += sr / N;
    diff.push_back((sa - sr) / N);
    a.conservation_residual += std::llabs(r.total_W - r.total_M);
    if (r.terminated) term += 1;
  }
  const double n = static_cast<double>(runs.size());
  a.available_per_site = avail / n;
  a.read_per_site = read / n;
  a.terminated_fraction = term / n;
  double mean = 0, var = 0;
  for (double d : diff) mean += d;
  mean /= n;
  for (double d : diff) var += (d - mean) * (d - mean);
  var = runs.size() > 1 ? var / (n - 1) : 0.0;
  a.margin_se = std::sqrt(var / n);

  TestReport c;
  c.test = "entropy_audit";
  c.statistic = "conservation_residual";
  c.value = static_cast<double>(a.conservation_residual);
  c.n = runs.size();
  c.pass = a.conservation_residual == 0;
  c.note = "sum over runs of |sum_u |W_u| - sum_v M_v|; must be 0";
  a.reports.push_back(c);

  TestReport cap;
  cap.test = "entropy_audit";
  cap.statistic = "read_capacity_violations";
  cap.value = static_cast<double>(over_capacity);
  cap.n = runs.size();
  cap.pass = over_capacity == 0;
  cap.note = "sites with M_v > |Y_v|";
  a.reports.push_back(cap);

  TestReport m;
  m.test = "entropy_audit";
  m.statistic = "read_bits_per_site";
  m.value = a.read_per_site;
  m.bound = a.available_per_site;
  m.slack = 3 * a.margin_se;
  m.n = runs.size();
  m.pass = a.read_per_site + m.slack < a.available_per_site;
  m.note = "pass if read + 3se < available; se of per-run (available - read)/site";
  a.reports.push_back(m);

  TestReport t;
  t.test = "entropy_audit";
  t.statistic = "terminated_fraction";
  t.value = a.terminated_fraction;
  t.bound = min_termination;
  t.n = runs.size();
  t.pass = a.terminated_fraction >= min_termination;
  t.note = "runs finishing before max_time";
  a.reports.push_back(t);
  return a;
}

TestReport small_boundary_check(const std::vector<BoundarySample>& samples, double delta, int degree) {
  if (!(delta > 0)) throw ConfigError("delta must be > 0");
  std::size_t occupied = 0, big = 0;
  for (const auto& s : samples) {
    if (!s.occupied) continue;
    ++occupied;
    if (static_cast<double>(s.boundary) >= delta * static_cast<double>(s.size)) ++big;
  }
  if (occupied == 0) throw ConfigError("small boundary check: origin never in B, C_0 undefined");
  const double n = static_cast<double>(samples.size());
  const double pl = static_cast<double>(big) / n;
  const double pb = static_cast<double>(samples.size() - occupied) / n;
  const double factor = degree / delta + 1.0;
  TestReport r;
  r.test = "small_boundary";
  r.statistic = "P(|dC0| >= delta|C0|)";
  r.value = pl;
  r.bound = factor * pb;
  r.slack = 3 * std::sqrt(pl * (1 - pl) / n) + factor * 3 * std::sqrt(pb * (1 - pb) / n);
  r.n = samples.size();
  r.pass = r.value <= r.bound + r.slack;
  r.note = "bound (d/delta+1)*P(0 not in B), d=" + std::to_string(degree) + ", delta=" + fmt_num(delta);
  return r;
}

bool equivariance_check(const EngineConfig& cfg, const ParameterChoice& params, const ProcessOracle& oracle,
                        std::uint64_t seed, const Automorphism& gamma) {
  const auto& g = cfg.graph;
  RunResult base = run_torus(cfg, params, oracle, seed);
  RunResult moved = run_torus(cfg, params, oracle, seed, &gamma);
  if (!base.terminated || !moved.terminated)
    throw UnresolvedError("equivariance check: run did not resolve the window (" + base.status + "/" + moved.status + ")",
                          0);
  for (std::size_t i = 0; i < base.sites.size(); ++i) {
    std::size_t j = g.index(gamma.apply(base.sites[i]));
    if (moved.value[j] != base.value[i]) return false;
  }
  return true;
}

std::vector<Automorphism> standard_automorphisms(const LatticeGraph& g) {
  std::vector<Automorphism> out;
  for (int i = 0; i < g.dim(); ++i) {
    Vertex e;
    e[i] = 1;
    out.push_back(Automorphism::translation(g, e));
  }
  for (int i = 0; i < g.dim(); ++i) out.push_back(Automorphism::reflection(g, i));
  if (g.dim() == 2) out.push_back(Automorphism::axis_permutation(g, {1, 0}));
  return out;
}

TestReport entry_level_law(const std::vector<int>& levels, double tolerance) {
  if (levels.empty()) throw ConfigError("entry level law needs samples");
  std::map<int, double> emp;
  for (int n : levels) emp[n] += 1.0 / static_cast<double>(levels.size());
  int top = emp.rbegin()->first;
  double tv = 0, covered = 0;
  for (int n = 1; n <= top; ++n) {
    double p = std::ldexp(1.0, -n);
    covered += p;
    auto it = emp.find(n);
    tv += std::fabs((it == emp.end() ? 0.0 : it->second) - p);
  }
  tv += 1.0 - covered;  // geometric mass beyond the largest observed level
  TestReport r;
  r.test = "cell_law";
  r.statistic = "entry_level_vs_geometric(1/2)";
  r.value = 0.5 * tv;
  r.bound = tolerance;
  r.n = levels.size();
  r.pass = r.value <= r.bound;
  r.note = "fixed tolerance";
  return r;
}

TestReport extent_law(const std::vector<std::int64_t>& extents, int n, double tolerance) {
  if (extents.empty()) throw ConfigError("extent law needs samples");
  const double q = std::ldexp(1.0, -n);
  std::map<std::int64_t, double> emp;
  for (auto x : extents) emp[x] += 1.0 / static_cast<double>(extents.size());
  std::int64_t top = emp.rbegin()->first;
  double tv = 0, covered = 0;
  for (std::int64_t j = 0; j <= top; ++j) {
    double p = std::pow(1 - q, static_cast<double>(j)) * q;
    covered += p;
    auto it = emp.find(j);
    tv += std::fabs((it == emp.end() ? 0.0 : it->second) - p);
  }
  tv += 1.0 - covered;
  TestReport r;
  r.test = "cell_law";
  r.statistic = "extent_given_level_" + std::to_string(n) + "_vs_geometric(2^-" + std::to_string(n) + ")";
  r.value = 0.5 * tv;
  r.bound = tolerance;
  r.n = extents.size();
  r.pass = r.value <= r.bound;
  r.note = "fixed tolerance; both sides pooled";
  return r;
}

StructureCheck voronoi_structure_check(const LatticeGraph& g, const CellPolicy& p, int levels,
                                       std::uint64_t first_seed, std::size_t n_seeds, std::int64_t window) {
  if (p.kind != CellPolicy::Kind::Voronoi) throw ConfigError("structure check is for Voronoi cells");
  StructureCheck out;
  out.seeds = n_seeds;
  const auto region = g.ball(g.origin(), window);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    RandomField f(g, first_seed + s);
    CellProcessView view(g, f, p);
    bool nest_ok = true, fin_ok = true, sep_ok = true;
    try {
      for (int n = 1; n <= levels; ++n) {
        for (const auto& v : region) {
          bool in_n = view.in_level(v, n);
          if (n < levels && in_n && !view.in_level(v, n + 1)) nest_ok = false;
          if (!in_n) continue;
          const auto& C = view.component(v, n);
          if (C.empty()) fin_ok = false;
          if (n == 1) continue;
          // Either an unchanged A_{n-1} cell or inside one eroded cell.
          bool old = view.in_level(C.front(), n - 1) && view.component(C.front(), n - 1).size() == C.size();
          if (old) {
            for (const auto& u : C)
              if (!view.in_level(u, n - 1)) old = false;
          }
          if (old) continue;
          const int raw = n + p.level_shift;
          auto o = view.owner(C.front(), raw);
          bool inside = o.has_value();
          for (const auto& u : C) {
            if (!inside) break;
            auto ou = view.owner(u, raw);
            inside = ou && *ou == *o && view.in_cell_prime(u, raw);
          }
          if (!inside) sep_ok = false;
        }
      }
    } catch (const UnresolvedError& e) {
      fin_ok = false;
      out.messages.push_back("seed " + std::to_string(first_seed + s) + ": " + e.what());
    }
    if (!nest_ok) ++out.nesting_failures;
    if (!fin_ok) ++out.finiteness_failures;
    if (!sep_ok) ++out.separation_failures;
  }
  return out;
}

std::vector<std::vector<Vertex>> window_patterns(int dim) {
  if (dim == 1) return {{Vertex(0)}, {Vertex(0), Vertex(1)}, {Vertex(0), Vertex(2)}, {Vertex(0), Vertex(1), Vertex(2)}};
  Vertex o, a, b, a2, b2;
  a[0] = 1;
  b[1] = 1;
  a2[0] = 2;
  b2[1] = 2;
  return {{o}, {o, a}, {o, b}, {o, a, b}, {o, a, a2}, {o, b, b2}};
}

std::vector<TestReport> dependence_suite(const SampleBatch& b, std::int64_t k, const TvOptions& opt) {
  const auto& g = *b.graph;
  std::vector<std::vector<Vertex>> shapes = {{Vertex{}}};
  for (const auto& p : window_patterns(g.dim()))
    if (p.size() == 2) shapes.push_back(p);
  std::vector<TestReport> out;
  for (const auto& U : shapes)
    for (const auto& Vshape : shapes)
      for (std::size_t t = 1; t < g.vertex_count(); ++t) {
        const Vertex shift = g.vertex_at(t);
        std::vector<Vertex> V;
        for (const auto& v : Vshape) V.push_back(g.shifted(v, shift));
        if (separation(g, U, V) <= k) continue;
        out.push_back(dependence_test(b, U, V, k, opt));
      }
  return out;
}

std::string reports_csv(const std::vector<TestReport>& reports) {
  std::string out = "test,statistic,value,bound,slack,n,pass\n";
  for (const auto& r : reports) {
    out += r.test + "," + r.statistic + "," + fmt_num(r.value) + "," + fmt_num(r.bound) + "," + fmt_num(r.slack) + "," +
           std::to_string(r.n) + "," + (r.pass ? "1" : "0") + "\n";
  }
  return out;
}

std::string reports_json(const std::vector<TestReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    j.push_back({{"test", r.test},
                 {"statistic", r.statistic},
                 {"value", r.value},
                 {"bound", r.bound},
                 {"slack", r.slack},
                 {"n", r.n},
                 {"pass", r.pass},
                 {"note", r.note}});
  }
  return j.dump(2) + "\n";
}

}  // namespace fincode
