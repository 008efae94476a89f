#include "fincode/cell_process.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fincode/errors.hpp"

namespace fincode {

namespace {

// Ball sizes of the infinite lattice with the same dimension and fuzz.
std::int64_t infinite_ball_size(int d, int k, std::int64_t s) {
  // Number of integer points with L1 norm <= k*s in d dimensions.
  std::int64_t R = static_cast<std::int64_t>(k) * s;
  std::vector<std::int64_t> cnt(static_cast<std::size_t>(R + 1), 1);  // d = 0: one point per budget
  for (int dim = 1; dim <= d; ++dim) {
    std::vector<std::int64_t> nxt(static_cast<std::size_t>(R + 1), 0);
    for (std::int64_t b = 0; b <= R; ++b)
      for (std::int64_t x = -b; x <= b; ++x) nxt[static_cast<std::size_t>(b)] += cnt[static_cast<std::size_t>(b - std::llabs(x))];
    cnt = std::move(nxt);
  }
  return cnt[static_cast<std::size_t>(R)];
}

}  // namespace

double CellPolicy::eps_level(int raw_level, const LatticeGraph& g) const {
  if (kind == Kind::SimpleZ) return 0.5;
  double e;
  if (!eps_schedule.empty()) {
    std::size_t i = static_cast<std::size_t>(raw_level - 1);
    if (i < eps_schedule.size()) {
      e = eps_schedule[i];
    } else {
      e = eps_schedule.back() * std::ldexp(1.0, -static_cast<int>(i + 1 - eps_schedule.size()));
    }
  } else {
    // eps_n = 1/|Λ_{s_n}| with s_n the least s such that |Λ_s| >= 2^n / eps.
    double target = std::ldexp(1.0, raw_level) / eps;
    std::int64_t s = 0;
    std::int64_t size = 1;
    while (static_cast<double>(size) < target) {
      ++s;
      size = infinite_ball_size(g.dim(), g.fuzz(), s);
    }
    e = 1.0 / static_cast<double>(size);
  }
  if (g.finite()) e = std::max(e, 1.0 / static_cast<double>(g.vertex_count()));
  return e;
}

struct CellProcessView::Level {
  explicit Level(const LatticeGraph& g) : member(g), center(g), owner_state(g), owner_v(g), prime(g), comp(g) {}
  double eps = -1.0;
  VertexTable<signed char> member;
  VertexTable<signed char> center;
  VertexTable<signed char> owner_state;  // 1 none, 2 unique owner
  VertexTable<Vertex> owner_v;
  VertexTable<signed char> prime;
  VertexTable<int> comp;
  std::deque<std::vector<Vertex>> comps;  // deque keeps references stable
  std::vector<signed char> comp_outside;  // 0 unknown, 1 no, 2 yes (w.r.t. next level's A')
};

CellProcessView::CellProcessView(const LatticeGraph& g, const RandomField& f, CellPolicy p)
    : g_(&g), f_(&f), policy_(std::move(p)) {
  if (policy_.max_level < 1) throw ConfigError("max_level must be >= 1");
  if (policy_.level_shift < 0) throw ConfigError("level shift must be >= 0");
  if (policy_.kind == CellPolicy::Kind::SimpleZ && g.dim() != 1)
    throw ConfigError("simple_z cells are defined on one-dimensional graphs only");
  if (policy_.kind == CellPolicy::Kind::Voronoi && policy_.eps_schedule.empty() && !(policy_.eps > 0))
    throw ConfigError("voronoi schedule needs eps > 0");
  for (double e : policy_.eps_schedule)
    if (!(e > 0 && e <= 1)) throw ConfigError("eps_schedule entries must lie in (0,1]");
  simple_first_ = std::make_unique<VertexTable<int>>(g);
  simple_checked_ = std::make_unique<VertexTable<int>>(g);
}

CellProcessView::~CellProcessView() = default;

CellProcessView::Level& CellProcessView::raw(int raw_level) {
  while (static_cast<int>(levels_.size()) < raw_level) levels_.push_back(std::make_unique<Level>(*g_));
  return *levels_[static_cast<std::size_t>(raw_level - 1)];
}

bool CellProcessView::is_center(const Vertex& v, int raw_level) {
  auto& L = raw(raw_level);
  if (auto* c = L.center.find(v)) return *c == 2;
  if (L.eps < 0) L.eps = policy_.eps_level(raw_level, *g_);
  bool b = cell_layer_bit(*f_, v, raw_level, L.eps);
  L.center.put(v, b ? 2 : 1);
  return b;
}

std::optional<Vertex> CellProcessView::owner(const Vertex& v, int raw_level) {
  auto& L = raw(raw_level);
  if (auto* s = L.owner_state.find(v)) {
    if (*s == 1) return std::nullopt;
    return *L.owner_v.find(v);
  }
  std::optional<Vertex> result;
  std::int64_t limit = g_->finite() ? g_->diameter() : policy_.window_cap;
  bool found = false;
  for (std::int64_t r = 0; r <= limit && !found; ++r) {
    int count = 0;
    Vertex hit;
    while (static_cast<std::int64_t>(sphere_offsets_.size()) <= r)
      sphere_offsets_.push_back(g_->sphere(g_->origin(), static_cast<std::int64_t>(sphere_offsets_.size())));
    for (const auto& o : sphere_offsets_[static_cast<std::size_t>(r)]) {
      const Vertex w = g_->shifted(v, o);
      if (is_center(w, raw_level)) {
        ++count;
        hit = w;
      }
    }
    if (count > 0) {
      found = true;
      if (count == 1) result = hit;
    }
  }
  if (!found && !g_->finite()) throw UnresolvedError("no Voronoi centre within the window cap", limit);
  L.owner_state.put(v, result ? 2 : 1);
  if (result) L.owner_v.put(v, *result);
  return result;
}

bool CellProcessView::in_cell_prime(const Vertex& v, int raw_level) {
  auto& L = raw(raw_level);
  if (auto* c = L.prime.find(v)) return *c == 2;
  bool in = false;
  auto o = owner(v, raw_level);
  if (o) {
    in = true;
    for (const auto& w : g_->neighbors(v)) {
      auto ow = owner(w, raw_level);
      if (!ow || *ow != *o) {
        in = false;
        break;
      }
    }
  }
  L.prime.put(v, in ? 2 : 1);
  return in;
}

bool CellProcessView::in_raw(const Vertex& v, int raw_level) {
  if (policy_.kind == CellPolicy::Kind::SimpleZ) {
    const int* first = simple_first_->find(v);
    if (first && *first > 0) return *first <= raw_level;
    const int* checked = simple_checked_->find(v);
    int from = checked ? *checked + 1 : 1;
    for (int j = from; j <= raw_level; ++j) {
      if (cell_layer_bit(*f_, v, j, 0.5)) {
        simple_first_->put(v, j);
        simple_checked_->put(v, j);
        return true;
      }
    }
    if (!checked || *checked < raw_level) simple_checked_->put(v, raw_level);
    if (!first) simple_first_->put(v, 0);
    return false;
  }
  auto& L = raw(raw_level);
  if (auto* c = L.member.find(v)) return *c == 2;
  bool in;
  if (raw_level == 1) {
    in = in_cell_prime(v, 1);
  } else {
    in = in_raw(v, raw_level - 1) || (in_cell_prime(v, raw_level) && !in_danger(v, raw_level - 1));
  }
  raw(raw_level).member.put(v, in ? 2 : 1);
  return in;
}

int CellProcessView::raw_component(const Vertex& v, int raw_level) {
  auto& L = raw(raw_level);
  if (auto* c = L.comp.find(v)) return *c;
  if (!in_raw(v, raw_level)) throw ConfigError("component requested for a vertex outside the level");
  int id = static_cast<int>(L.comps.size());
  std::vector<Vertex> members;
  std::deque<Vertex> queue;
  L.comp.put(v, id);
  queue.push_back(v);
  std::int64_t far = 0;
  while (!queue.empty()) {
    Vertex u = queue.front();
    queue.pop_front();
    members.push_back(u);
    far = std::max(far, g_->distance(v, u));
    if (static_cast<std::int64_t>(members.size()) > policy_.volume_cap)
      throw UnresolvedError("cell exceeds the volume cap", far);
    for (const auto& w : g_->neighbors(u)) {
      if (raw(raw_level).comp.find(w)) continue;
      if (!in_raw(w, raw_level)) continue;
      raw(raw_level).comp.put(w, id);
      queue.push_back(w);
    }
  }
  std::sort(members.begin(), members.end());
  auto& L2 = raw(raw_level);
  L2.comps.push_back(std::move(members));
  L2.comp_outside.push_back(0);
  return id;
}

bool CellProcessView::component_meets_outside(int comp, int raw_level) {
  auto& L = raw(raw_level);
  auto& flag = L.comp_outside[static_cast<std::size_t>(comp)];
  if (flag) return flag == 2;
  bool meets = false;
  std::vector<Vertex> members = L.comps[static_cast<std::size_t>(comp)];
  for (const auto& x : members) {
    if (!in_cell_prime(x, raw_level + 1)) {
      meets = true;
      break;
    }
  }
  raw(raw_level).comp_outside[static_cast<std::size_t>(comp)] = meets ? 2 : 1;
  return meets;
}

bool CellProcessView::in_danger(const Vertex& v, int raw_level) {
  auto check = [&](const Vertex& w) {
    return in_raw(w, raw_level) && component_meets_outside(raw_component(w, raw_level), raw_level);
  };
  if (check(v)) return true;
  for (const auto& w : g_->neighbors(v))
    if (check(w)) return true;
  return false;
}

bool CellProcessView::in_level(const Vertex& v, int n) {
  if (n < 1) return false;
  return in_raw(g_->canonical(v), n + policy_.level_shift);
}

int CellProcessView::component_id(const Vertex& v, int n) { return raw_component(g_->canonical(v), n + policy_.level_shift); }

const std::vector<Vertex>& CellProcessView::component(const Vertex& v, int n) {
  int raw_level = n + policy_.level_shift;
  int id = raw_component(g_->canonical(v), raw_level);
  return raw(raw_level).comps[static_cast<std::size_t>(id)];
}

int CellProcessView::entry_level(const Vertex& v) {
  for (int n = 1; n <= policy_.max_level; ++n)
    if (in_level(v, n)) return n;
  std::int64_t r = 0;
  if (f_->probe()) r = f_->probe()->max_radius;
  throw UnresolvedError("vertex not covered within max_level", r);
}

CellProcessView::Entry CellProcessView::entry(const Vertex& v) {
  Entry e;
  e.level = entry_level(v);
  e.cell = component(v, e.level);
  for (const auto& u : e.cell)
    if (!in_level(u, e.level - 1)) e.fresh.push_back(u);
  return e;
}

int CellProcessView::saturation_level() {
  if (!g_->finite()) throw ConfigError("saturation level is defined on finite graphs");
  auto verts = g_->all_vertices();
  for (int n = 1; n <= policy_.max_level; ++n) {
    bool all = true;
    for (const auto& v : verts) {
      if (!in_level(v, n)) {
        all = false;
        break;
      }
    }
    if (all) return n;
  }
  return -1;
}

std::vector<LevelStats> cell_level_stats(const LatticeGraph& g, const CellPolicy& p, int levels,
                                         std::uint64_t first_seed, std::size_t n_seeds) {
  std::vector<LevelStats> out(static_cast<std::size_t>(levels));
  std::vector<std::vector<double>> ratios(static_cast<std::size_t>(levels));
  std::vector<double> covered(static_cast<std::size_t>(levels), 0), size_sum(static_cast<std::size_t>(levels), 0);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    RandomField f(g, first_seed + s);
    CellProcessView view(g, f, p);
    for (int n = 1; n <= levels; ++n) {
      auto i = static_cast<std::size_t>(n - 1);
      if (!view.in_level(g.origin(), n)) continue;
      covered[i] += 1;
      const auto& c = view.component(g.origin(), n);
      size_sum[i] += static_cast<double>(c.size());
      ratios[i].push_back(static_cast<double>(edge_boundary_size(g, c)) / static_cast<double>(c.size()));
    }
  }
  auto quantile = [](std::vector<double>& v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto idx = static_cast<std::size_t>(std::min<double>(static_cast<double>(v.size() - 1), std::floor(q * static_cast<double>(v.size()))));
    return v[idx];
  };
  for (int n = 1; n <= levels; ++n) {
    auto i = static_cast<std::size_t>(n - 1);
    auto& st = out[i];
    st.level = n;
    st.samples = n_seeds;
    st.p_covered = covered[i] / static_cast<double>(n_seeds);
    st.mean_cell_size = covered[i] > 0 ? size_sum[i] / covered[i] : 0.0;
    st.boundary_q50 = quantile(ratios[i], 0.5);
    st.boundary_q90 = quantile(ratios[i], 0.9);
    st.boundary_q99 = quantile(ratios[i], 0.99);
  }
  return out;
}

double estimate_component_radius_median(const LatticeGraph& g, const CellPolicy& p, int n, std::uint64_t first_seed,
                                        std::size_t n_seeds) {
  std::vector<double> radii;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    RandomField f(g, first_seed + s);
    CellProcessView view(g, f, p);
    const Vertex o = g.origin();
    if (n > 1 && view.in_level(o, n - 1)) continue;
    // Component of the origin in A_{n-1} ∪ {0}.
    std::int64_t far = 0;
    VertexSet seen{o};
    std::deque<Vertex> queue{o};
    while (!queue.empty()) {
      Vertex u = queue.front();
      queue.pop_front();
      far = std::max(far, g.distance(o, u));
      for (const auto& w : g.neighbors(u)) {
        if (seen.count(w) || !(n > 1 && view.in_level(w, n - 1))) continue;
        seen.insert(w);
        queue.push_back(w);
      }
    }
    radii.push_back(static_cast<double>(far));
  }
  if (radii.empty()) return 0.0;
  std::sort(radii.begin(), radii.end());
  return radii[radii.size() / 2];
}

}  // namespace fincode
