#include "fincode/coding_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "fincode/errors.hpp"

namespace fincode {

std::string to_string(Mutation m) {
  switch (m) {
    case Mutation::None: return "none";
    case Mutation::SkipConditioning: return "skip_conditioning";
    case Mutation::ReuseBits: return "reuse_bits";
    case Mutation::IgnoreOrder: return "ignore_order";
  }
  return "?";
}

std::string to_string(BitPolicy p) {
  return p == BitPolicy::EntropyControlled ? "entropy_controlled" : "local_unbounded";
}

std::uint64_t run_seed(std::uint64_t master, std::uint64_t replica) {
  return mix64(master ^ mix64(replica + 0x5851f42d4c957f2dULL));
}

std::vector<std::vector<std::size_t>> chunk_fresh_part(const LatticeGraph& g, const std::vector<Vertex>& sites,
                                                       const std::vector<std::size_t>& fresh_in_order,
                                                       std::size_t chunk_size) {
  std::vector<std::vector<std::size_t>> chunks;
  if (chunk_size == 0) chunk_size = 1;
  std::vector<std::size_t> remaining(fresh_in_order.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;  // positions in serialization order
  while (!remaining.empty()) {
    if (remaining.size() <= chunk_size) {
      std::vector<std::size_t> c;
      for (auto p : remaining) c.push_back(fresh_in_order[p]);
      chunks.push_back(std::move(c));
      break;
    }
    // Seed at the earliest remaining site, then its nearest remaining sites.
    const Vertex& seed = sites[fresh_in_order[remaining.front()]];
    std::vector<std::pair<std::int64_t, std::size_t>> keyed;
    keyed.reserve(remaining.size());
    for (auto p : remaining) keyed.push_back({g.distance(seed, sites[fresh_in_order[p]]), p});
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(chunk_size), keyed.end());
    std::vector<std::size_t> take;
    for (std::size_t i = 0; i < chunk_size; ++i) take.push_back(keyed[i].second);
    std::sort(take.begin(), take.end());
    std::vector<std::size_t> c;
    for (auto p : take) c.push_back(fresh_in_order[p]);
    chunks.push_back(std::move(c));
    std::vector<std::size_t> rest;
    std::size_t j = 0;
    for (auto p : remaining) {
      if (j < take.size() && take[j] == p) {
        ++j;
        continue;
      }
      rest.push_back(p);
    }
    remaining = std::move(rest);
  }
  return chunks;
}

namespace {

struct Agent {
  std::size_t site = 0;
  int level = 0;
  std::vector<std::size_t> fresh;  // serialization order
  std::vector<std::size_t> cond;   // order used for conditioning
  std::vector<std::vector<std::size_t>> chunks;

  int state = 0;  // 0 waiting, 1 active, 2 done
  std::size_t pending = 0;
  std::int64_t activated = 0;
  std::size_t chunk = 0;
  std::optional<Law> law;
  std::optional<DdgSimulation> ddg;
  std::unordered_map<std::size_t, int> sampled;
  std::int64_t bits = 0;
  std::int64_t completed = -1;
};

struct Universe {
  const LatticeGraph* g = nullptr;
  std::vector<Vertex> sites;
  std::vector<std::int64_t> len;
  std::vector<int> level;
  std::vector<Agent> agents;
  std::vector<std::size_t> order;  // site indices in <= order
  std::vector<std::size_t> rank;
  bool cyclic = false;
};

std::size_t chunk_size_for(const EngineConfig& cfg) {
  // The skip-conditioning defect draws every site from its own marginal.
  if (cfg.mutation == Mutation::SkipConditioning) return 1;
  std::size_t S = cfg.process.alphabet.size();
  if (S <= 1) return 1u << 20;
  std::size_t b = 0;
  std::size_t outcomes = 1;
  while (outcomes * S <= cfg.chunk_cap) {
    outcomes *= S;
    ++b;
  }
  return std::max<std::size_t>(b, 1);
}

// Groups the cells of every level into agents.
void build_agents(Universe& u, CellProcessView& cells, int top, const EngineConfig& cfg) {
  const std::size_t n_sites = u.sites.size();
  std::unordered_map<Vertex, std::size_t, VertexHash> index;
  for (std::size_t i = 0; i < n_sites; ++i) index[u.sites[i]] = i;
  const std::size_t b = chunk_size_for(cfg);
  auto by_rank = [&](std::size_t a, std::size_t c) { return u.rank[a] < u.rank[c]; };
  auto by_coord = [&](std::size_t a, std::size_t c) { return u.sites[a] < u.sites[c]; };
  for (int n = 1; n <= top; ++n) {
    std::map<int, bool> seen;
    for (std::size_t oi = 0; oi < n_sites; ++oi) {
      std::size_t i = u.order[oi];
      if (u.level[i] > n) continue;
      int c = cells.component_id(u.sites[i], n);
      if (seen.count(c)) continue;
      seen[c] = true;
      Agent a;
      a.level = n;
      for (const auto& v : cells.component(u.sites[i], n)) {
        auto it = index.find(v);
        if (it == index.end()) throw InvariantViolation("cell leaves the evaluated region");
        if (u.level[it->second] == n) {
          a.fresh.push_back(it->second);
        } else {
          a.cond.push_back(it->second);
        }
      }
      if (a.fresh.empty()) continue;
      std::sort(a.fresh.begin(), a.fresh.end(), by_rank);
      a.site = a.fresh.front();
      if (cfg.mutation == Mutation::IgnoreOrder) {
        std::sort(a.fresh.begin(), a.fresh.end(), by_coord);
        std::sort(a.cond.begin(), a.cond.end(), by_coord);
      } else {
        std::sort(a.cond.begin(), a.cond.end(), by_rank);
      }
      a.chunks = chunk_fresh_part(*u.g, u.sites, a.fresh, b);
      u.agents.push_back(std::move(a));
    }
  }
}

class Core {
 public:
  Core(Universe& u, const RandomField& field, const ProcessOracle& oracle, const EngineConfig& cfg, RunResult& out)
      : u_(u), field_(field), oracle_(oracle), cfg_(cfg), out_(out) {}

  void run() {
    const std::size_t n = u_.sites.size();
    value_.assign(n, -1);
    T_.assign(n, -1);
    M_.assign(n, 0);
    last_read_.assign(n, -1);
    watchers_.assign(n, {});
    for (std::size_t a = 0; a < u_.agents.size(); ++a) {
      auto& ag = u_.agents[a];
      ag.pending = ag.cond.size();
      for (auto s : ag.cond) watchers_[s].push_back(a);
    }
    for (std::size_t a = 0; a < u_.agents.size(); ++a)
      if (u_.agents[a].pending == 0) start_queue_.push_back(a);
    remaining_bits_ = 0;
    unbounded_ = false;
    for (auto l : u_.len) {
      if (l < 0) unbounded_ = true;
      else remaining_bits_ += l;
    }
    skip_ = u_.cyclic && !unbounded_;
    if (skip_)
      for (std::size_t r = 0; r < u_.order.size(); ++r)
        if (u_.len[u_.order[r]] > 0) avail_.insert(r);
    drain(-1);

    std::int64_t t = 0;
    for (; t <= cfg_.max_time; ++t) {
      if (determined_ == n) break;
      std::vector<std::size_t> now;
      for (auto a : active_)
        if (u_.agents[a].state == 1 && u_.agents[a].activated < t) now.push_back(a);
      if (now.empty() && start_queue_.empty()) break;
      if (!unbounded_ && remaining_bits_ == 0) break;
      for (auto a : now) read(a, t);
      drain(t);
      std::vector<std::size_t> keep;
      for (auto a : active_)
        if (u_.agents[a].state == 1) keep.push_back(a);
      active_ = std::move(keep);
      if (skip_) {
        // Nothing happens until some active agent lands on a site with bits
        // left; jump there.
        if (avail_.empty() || active_.empty()) continue;
        const std::int64_t N = static_cast<std::int64_t>(u_.order.size());
        std::int64_t next = std::numeric_limits<std::int64_t>::max();
        for (auto ai : active_) {
          const Agent& a = u_.agents[ai];
          std::int64_t from = std::max(t + 1, a.activated + 1);
          std::int64_t pos = (static_cast<std::int64_t>(u_.rank[a.site]) + from) % N;
          auto it = avail_.lower_bound(static_cast<std::size_t>(pos));
          std::int64_t r = static_cast<std::int64_t>(it == avail_.end() ? *avail_.begin() : *it);
          next = std::min(next, from + (r - pos + N) % N);
        }
        t = std::min(next, cfg_.max_time + 1) - 1;
      }
    }
    out_.steps = t;
    out_.terminated = determined_ == n;
    if (!out_.terminated) {
      out_.status = "nontermination";
      out_.message = "undetermined sites remain after " + std::to_string(t) + " steps";
      for (std::size_t a = 0; a < u_.agents.size(); ++a)
        if (u_.agents[a].state != 2) out_.stuck.push_back(a);
    }
    out_.value = value_;
    out_.T = T_;
    out_.bits_read = M_;
    out_.bits_available = u_.len;
    for (const auto& ag : u_.agents) {
      AgentSummary s;
      s.vertex = u_.sites[ag.site];
      s.level = ag.level;
      s.fresh = ag.fresh.size();
      s.bits = ag.bits;
      s.completed = ag.completed;
      s.chunks = ag.chunks.size();
      out_.agents.push_back(s);
      out_.total_W += ag.bits;
    }
    for (auto m : M_) out_.total_M += m;
    // Every bit an agent consumed was read from exactly one site.
    if (cfg_.mutation != Mutation::ReuseBits && out_.total_W != out_.total_M)
      throw InvariantViolation("bit ledger out of balance: W=" + std::to_string(out_.total_W) +
                               " M=" + std::to_string(out_.total_M));
  }

 private:
  std::size_t transport(const Agent& a, std::int64_t t) const {
    if (!u_.cyclic) return a.site;
    std::size_t N = u_.order.size();
    return u_.order[(u_.rank[a.site] + static_cast<std::size_t>(t % static_cast<std::int64_t>(N))) % N];
  }

  void read(std::size_t ai, std::int64_t t) {
    Agent& a = u_.agents[ai];
    std::size_t s = transport(a, t);
    if (last_read_[s] == t) throw InvariantViolation("two agents read the same site in one step");
    last_read_[s] = t;
    if (u_.len[s] >= 0 && M_[s] >= u_.len[s]) return;
    bool bit = bits_word_bit(field_, u_.sites[s], static_cast<std::uint64_t>(M_[s] + 1));
    if (cfg_.mutation != Mutation::ReuseBits) {
      ++M_[s];
      if (u_.len[s] >= 0) --remaining_bits_;
      if (skip_ && M_[s] == u_.len[s]) avail_.erase(u_.rank[s]);
    }
    if (u_.len[s] >= 0 && M_[s] > u_.len[s]) throw InvariantViolation("bits read beyond the available word");
    ++a.bits;
    a.ddg->feed(bit);
    if (a.ddg->halted()) {
      record(a);
      ++a.chunk;
      if (prepare(a)) complete(ai, t);
    }
  }

  // Builds the law of the current chunk; returns true once all chunks are
  // sampled (zero-bit chunks are consumed here).
  bool prepare(Agent& a) {
    while (a.chunk < a.chunks.size()) {
      ConditionalQuery q;
      for (auto s : a.chunks[a.chunk]) q.sample.push_back(u_.sites[s]);
      if (cfg_.mutation != Mutation::SkipConditioning) {
        for (auto s : a.cond) q.given.push_back({u_.sites[s], value_[s]});
        for (std::size_t c = 0; c < a.chunk; ++c)
          for (auto s : a.chunks[c]) q.given.push_back({u_.sites[s], a.sampled.at(s)});
      }
      a.law = oracle_.conditional(q);
      a.ddg.emplace(a.law->dist);
      if (!a.ddg->halted()) return false;
      record(a);
      ++a.chunk;
    }
    return true;
  }

  void record(Agent& a) {
    const auto& outcome = a.law->outcomes[a.ddg->output()];
    const auto& sites = a.chunks[a.chunk];
    for (std::size_t j = 0; j < sites.size(); ++j) a.sampled[sites[j]] = outcome[j];
  }

  void complete(std::size_t ai, std::int64_t t) {
    Agent& a = u_.agents[ai];
    a.state = 2;
    a.completed = t;
    for (auto s : a.fresh) {
      if (value_[s] >= 0) throw InvariantViolation("output written twice");
      value_[s] = a.sampled.at(s);
      T_[s] = std::max<std::int64_t>(t, 0);
      ++determined_;
      for (auto w : watchers_[s])
        if (--u_.agents[w].pending == 0) start_queue_.push_back(w);
    }
  }

  void drain(std::int64_t t) {
    while (!start_queue_.empty()) {
      std::size_t ai = start_queue_.front();
      start_queue_.pop_front();
      Agent& a = u_.agents[ai];
      a.state = 1;
      a.activated = t;
      a.chunk = 0;
      if (prepare(a)) {
        complete(ai, t);
      } else {
        active_.push_back(ai);
      }
    }
  }

  Universe& u_;
  const RandomField& field_;
  const ProcessOracle& oracle_;
  const EngineConfig& cfg_;
  RunResult& out_;
  std::vector<int> value_;
  std::vector<std::int64_t> T_;
  std::vector<std::int64_t> M_;
  std::vector<std::int64_t> last_read_;
  std::vector<std::vector<std::size_t>> watchers_;
  std::deque<std::size_t> start_queue_;
  std::vector<std::size_t> active_;
  std::size_t determined_ = 0;
  std::int64_t remaining_bits_ = 0;
  bool unbounded_ = false;
  bool skip_ = false;
  std::set<std::size_t> avail_;  // ranks of sites with unread bits
};

void fill_common(RunResult& out, const Universe& u) {
  out.sites = u.sites;
  out.level = u.level;
}

}  // namespace

RunResult run_torus(const EngineConfig& cfg, const ParameterChoice& params, const ProcessOracle& oracle,
                    std::uint64_t seed, const Automorphism* gamma) {
  RunResult out;
  out.seed = seed;
  const LatticeGraph& g = cfg.graph;
  if (!g.finite()) throw ConfigError("torus mode needs a finite graph");
  try {
    RandomField field(g, run_seed(cfg.seed, seed));
    if (gamma) field.set_pullback(gamma->inverse());
    CellPolicy cp = cfg.cell;
    cp.level_shift = params.level_shift;
    CellProcessView cells(g, field, cp);
    BaseOrder base(g, field, cfg.order);
    RefinedOrder ord(cells, base);
    const auto& global = ord.global_order();
    Universe u;
    u.g = &g;
    u.sites = g.all_vertices();
    const std::size_t N = u.sites.size();
    u.rank.assign(N, 0);
    for (std::size_t i = 0; i < N; ++i) {
      auto idx = g.index(global[i]);
      u.order.push_back(idx);
      u.rank[idx] = i;
    }
    u.level.resize(N);
    for (std::size_t i = 0; i < N; ++i) u.level[i] = cells.entry_level(u.sites[i]);
    u.len.resize(N);
    for (std::size_t i = 0; i < N; ++i)
      u.len[i] = cfg.policy == BitPolicy::EntropyControlled ? bits_word_length(field, u.sites[i], params.budget) : -1;
    u.cyclic = cfg.policy == BitPolicy::EntropyControlled;
    out.top_level = ord.top_level();
    build_agents(u, cells, out.top_level, cfg);
    fill_common(out, u);
    Core core(u, field, oracle, cfg, out);
    core.run();
    out.label_bits = base.label_bits_used();
  } catch (const UnresolvedError& e) {
    out.status = "unresolved";
    out.message = e.what();
    out.terminated = false;
  }
  return out;
}

RunResult run_lazy(const EngineConfig& cfg, const ParameterChoice& params, const ProcessOracle& oracle,
                   std::uint64_t seed, const Vertex& target) {
  RunResult out;
  out.seed = seed;
  const LatticeGraph& g = cfg.graph;
  if (cfg.policy != BitPolicy::LocalUnbounded)
    throw ConfigError("lazy evaluation supports the local_unbounded bit policy only");
  RadiusProbe probe;
  probe.graph = &g;
  probe.center = target;
  try {
    RandomField field(g, run_seed(cfg.seed, seed));
    field.set_probe(&probe);
    CellPolicy cp = cfg.cell;
    cp.level_shift = params.level_shift;
    CellProcessView cells(g, field, cp);
    BaseOrder base(g, field, cfg.order);
    RefinedOrder ord(cells, base);
    auto e = cells.entry(target);
    const auto& list = ord.cell_order(target, e.level);
    Universe u;
    u.g = &g;
    u.sites = list;
    const std::size_t N = list.size();
    for (std::size_t i = 0; i < N; ++i) {
      u.order.push_back(i);
      u.rank.push_back(i);
    }
    u.level.resize(N);
    for (std::size_t i = 0; i < N; ++i) u.level[i] = cells.entry_level(u.sites[i]);
    u.len.assign(N, -1);
    u.cyclic = false;
    out.top_level = e.level;
    build_agents(u, cells, e.level, cfg);
    fill_common(out, u);
    for (std::size_t i = 0; i < N; ++i)
      if (u.sites[i] == g.canonical(target)) out.target = i;
    Core core(u, field, oracle, cfg, out);
    core.run();
    out.label_bits = base.label_bits_used();
  } catch (const UnresolvedError& e) {
    out.status = "unresolved";
    out.message = e.what();
    out.terminated = false;
  }
  out.radius = probe.max_radius;
  return out;
}

namespace {

// Census of boxes [0,L)^d: least L with H(X_F)/|F| <= h_lower + eps; returns
// the boundary ratio there.
std::pair<double, int> census_delta(const EngineConfig& cfg, const ProcessOracle& oracle, double h_lower) {
  const auto& spec = oracle.spec();
  const int d = cfg.graph.dim();
  if (spec.offsets.size() == 1) return {std::numeric_limits<double>::infinity(), 1};
  if (d != 1) throw ConfigError("entropy census for block factors is implemented on one-dimensional graphs");
  auto line = LatticeGraph::line(cfg.graph.fuzz());
  auto H = oracle.interval_entropies(cfg.bracket_len);
  for (int L = 1; L <= static_cast<int>(H.size()); ++L) {
    if (H[static_cast<std::size_t>(L - 1)] / L <= h_lower + cfg.eps) {
      std::vector<Vertex> F;
      for (int i = 0; i < L; ++i) F.push_back(Vertex(i));
      return {static_cast<double>(edge_boundary_size(line, F)) / L, L};
    }
  }
  return {-1.0, static_cast<int>(H.size())};
}

}  // namespace

ParameterChoice choose_parameters(const EngineConfig& cfg, const ProcessOracle& oracle) {
  ParameterChoice pc;
  pc.level_shift = cfg.cell.level_shift;
  if (oracle.spec().offsets.size() == 1 || cfg.graph.dim() == 1) {
    pc.bracket = oracle.entropy_rate_bracket(cfg.bracket_len);
  } else {
    throw ConfigError("entropy bracket for multi-site windows needs a one-dimensional graph");
  }
  if (cfg.graph.fuzz() < oracle.spec().base_range())
    throw ConfigError("graph fuzz k is smaller than the process dependence range");
  if (cfg.policy != BitPolicy::EntropyControlled) {
    if (cfg.auto_shift) pc.level_shift = 0;
    return pc;
  }
  const double eps = cfg.eps;
  if (!(eps > 0)) throw ConfigError("eps must be > 0");
  pc.budget = cfg.p_override ? EntropyBudget::with_probability(pc.bracket.upper, eps, cfg.m, *cfg.p_override)
                             : EntropyBudget::make(pc.bracket.upper, eps, cfg.m);
  if (!(pc.budget.expected_length() > pc.bracket.upper + 3 * eps)) pc.flags.push_back("budget_mean_not_above_h_plus_3eps");
  if (!(pc.budget.word_entropy() < pc.bracket.lower + 5 * eps)) pc.flags.push_back("word_entropy_not_below_h_plus_5eps");

  if (cfg.delta) {
    pc.delta = *cfg.delta;
  } else {
    auto [census, L] = census_delta(cfg, oracle, pc.bracket.lower);
    pc.census_length = L;
    if (census < 0) {
      pc.flags.push_back("entropy_census_inconclusive");
      census = eps / 4;
    }
    pc.delta = std::min(eps / 4, census);
  }
  if (!(2 * pc.delta < eps)) pc.flags.push_back("two_delta_not_below_eps");

  const double S = static_cast<double>(oracle.alphabet_size());
  pc.shift_threshold = eps / (std::log2(S) + 2);
  if (!cfg.auto_shift) return pc;
  const std::size_t n = std::max<std::size_t>(cfg.calibration_samples, 1);
  const LatticeGraph& g = cfg.graph;
  // Shift s puts A_1 at raw level s+1, so one unshifted view per sample
  // answers a whole block of shifts.
  CellPolicy cp = cfg.cell;
  cp.level_shift = 0;
  constexpr int kMaxShift = 40, kBlock = 8;
  for (int lo = 0; lo <= kMaxShift; lo += kBlock) {
    const int hi = std::min(lo + kBlock - 1, kMaxShift);
    std::vector<std::size_t> hits(static_cast<std::size_t>(hi - lo + 1), 0);
    for (std::size_t i = 0; i < n; ++i) {
      RandomField f(g, mix64(cfg.seed ^ 0xca11b7a7e5eedULL) + i);
      CellProcessView cells(g, f, cp);
      for (int s = lo; s <= hi; ++s) {
        bool event = true;
        try {
          if (cells.in_level(g.origin(), s + 1)) {
            const auto& c = cells.component(g.origin(), s + 1);
            event = static_cast<double>(edge_boundary_size(g, c)) >= pc.delta * static_cast<double>(c.size());
          }
        } catch (const UnresolvedError&) {
          event = true;
        }
        if (event) ++hits[static_cast<std::size_t>(s - lo)];
      }
    }
    for (int s = lo; s <= hi; ++s) {
      double q = static_cast<double>(hits[static_cast<std::size_t>(s - lo)]) / static_cast<double>(n);
      double var = std::max(q * (1 - q), 1.0 / static_cast<double>(n));
      double sigma = std::sqrt(var / static_cast<double>(n));
      if (q + 3 * sigma < pc.shift_threshold) {
        pc.level_shift = s;
        pc.shift_event_rate = q;
        pc.shift_event_sigma = sigma;
        return pc;
      }
    }
  }
  throw ConfigError("level-shift calibration found no shift meeting the boundary condition");
}

}  // namespace fincode
