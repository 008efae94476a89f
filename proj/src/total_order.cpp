#include "fincode/total_order.hpp"

#include <algorithm>

#include "fincode/errors.hpp"

namespace fincode {

BaseOrder::BaseOrder(const LatticeGraph& g, const RandomField& f, OrderConfig cfg)
    : g_(&g), f_(&f), cfg_(cfg), sums_(g), labels_(g), eta_(g) {
  if (cfg_.mode == OrderConfig::Mode::SphereSum && !(cfg_.eps_ord > 0 && cfg_.eps_ord < 1))
    throw ConfigError("eps_ord must lie in (0,1)");
}

int BaseOrder::sphere_sum(const Vertex& v, std::int64_t n) {
  const std::vector<int>* have = sums_.find(v);
  if (have && static_cast<std::int64_t>(have->size()) > n) return (*have)[static_cast<std::size_t>(n)];
  std::vector<int> sums = have ? *have : std::vector<int>{};
  for (std::int64_t r = static_cast<std::int64_t>(sums.size()); r <= n; ++r) {
    int s = 0;
    while (static_cast<std::int64_t>(sphere_offsets_.size()) <= r)
      sphere_offsets_.push_back(g_->sphere(g_->origin(), static_cast<std::int64_t>(sphere_offsets_.size())));
    for (const auto& o : sphere_offsets_[static_cast<std::size_t>(r)]) {
      const Vertex u = g_->shifted(v, o);
      const signed char* e = eta_.find(u);
      signed char val;
      if (e) {
        val = *e;
      } else {
        val = ord_bit(*f_, u, 1, cfg_.eps_ord) ? 1 : 0;
        eta_.put(u, val);
      }
      s += val;
    }
    sums.push_back(s);
  }
  int out = sums[static_cast<std::size_t>(n)];
  sums_.put(v, std::move(sums));
  return out;
}

bool BaseOrder::label_bit(const Vertex& v, int i) {
  const std::vector<signed char>* have = labels_.find(v);
  if (have && static_cast<int>(have->size()) > i) return (*have)[static_cast<std::size_t>(i)] != 0;
  std::vector<signed char> bits = have ? *have : std::vector<signed char>{};
  while (static_cast<int>(bits.size()) <= i) {
    bits.push_back(ord_bit(*f_, v, static_cast<std::uint64_t>(bits.size()) + 2, 0.5) ? 1 : 0);
    ++label_bits_;
  }
  bool b = bits[static_cast<std::size_t>(i)] != 0;
  labels_.put(v, std::move(bits));
  return b;
}

BaseOrder::Result BaseOrder::compare(const Vertex& u, const Vertex& v) {
  std::int64_t radius = 0;
  if (cfg_.mode == OrderConfig::Mode::SphereSum) {
    std::int64_t limit = g_->finite() ? g_->diameter() : cfg_.max_radius;
    for (std::int64_t n = 0; n <= limit; ++n) {
      radius = n;
      int a = sphere_sum(u, n), b = sphere_sum(v, n);
      if (a != b) return {a < b, n};
    }
    if (!g_->finite()) throw UnresolvedError("sphere sums did not separate two vertices", limit);
  }
  for (int i = 0; i < cfg_.max_label_bits; ++i) {
    bool a = label_bit(u, i), b = label_bit(v, i);
    if (a != b) return {!a, radius};
  }
  throw UnresolvedError("uniform labels did not separate two vertices", radius);
}

bool BaseOrder::less(const Vertex& u, const Vertex& v) {
  if (u == v) return false;
  // Compare in a fixed orientation so both argument orders agree.
  if (v < u) return !compare(v, u).less;
  return compare(u, v).less;
}

std::int64_t BaseOrder::certificate_radius(const Vertex& u, const Vertex& v) {
  if (u == v) return 0;
  return v < u ? compare(v, u).radius : compare(u, v).radius;
}

Vertex BaseOrder::min_of(const std::vector<Vertex>& set) {
  if (set.empty()) throw ConfigError("minimum of an empty set");
  Vertex best = set[0];
  for (std::size_t i = 1; i < set.size(); ++i)
    if (less(set[i], best)) best = set[i];
  return best;
}

RefinedOrder::RefinedOrder(CellProcessView& cells, BaseOrder& base) : cells_(&cells), base_(&base) {}

const std::vector<Vertex>& RefinedOrder::cell_order(const Vertex& v, int n) {
  int comp = cells_->component_id(v, n);
  auto key = std::make_pair(n, comp);
  auto it = orders_.find(key);
  if (it != orders_.end()) return it->second;
  std::vector<Vertex> cell = cells_->component(v, n);
  std::vector<Vertex> out;
  std::vector<Vertex> fresh;
  // Older sub-cells, each represented by one member.
  std::vector<std::pair<Vertex, Vertex>> subs;  // (representative, base-order min)
  std::map<int, bool> seen;
  for (const auto& u : cell) {
    if (n > 1 && cells_->in_level(u, n - 1)) {
      int c = cells_->component_id(u, n - 1);
      if (seen.count(c)) continue;
      seen[c] = true;
      std::vector<Vertex> sub = cells_->component(u, n - 1);
      subs.push_back({u, base_->min_of(sub)});
    } else {
      fresh.push_back(u);
    }
  }
  std::sort(subs.begin(), subs.end(), [&](const auto& a, const auto& b) { return base_->less(a.second, b.second); });
  for (const auto& s : subs) {
    const auto& part = cell_order(s.first, n - 1);
    out.insert(out.end(), part.begin(), part.end());
  }
  std::sort(fresh.begin(), fresh.end(), [&](const Vertex& a, const Vertex& b) { return base_->less(a, b); });
  out.insert(out.end(), fresh.begin(), fresh.end());
  return orders_.emplace(key, std::move(out)).first->second;
}

bool RefinedOrder::less(const Vertex& u, const Vertex& v) {
  if (u == v) return false;
  const int max_level = cells_->policy().max_level;
  int n = std::max(cells_->entry_level(u), cells_->entry_level(v));
  for (; n <= max_level; ++n)
    if (cells_->component_id(u, n) == cells_->component_id(v, n)) break;
  if (n > max_level) throw UnresolvedError("vertices share no cell within max_level", 0);
  bool pu = n > 1 && cells_->in_level(u, n - 1);
  bool pv = n > 1 && cells_->in_level(v, n - 1);
  if (!pu && !pv) return base_->less(u, v);
  if (pu != pv) return pu;
  // Distinct older cells: compare their base-order minima.
  Vertex mu = base_->min_of(cells_->component(u, n - 1));
  Vertex mv = base_->min_of(cells_->component(v, n - 1));
  return base_->less(mu, mv);
}

Vertex RefinedOrder::successor(const Vertex& v) {
  const auto& g = cells_->graph();
  const int max_level = cells_->policy().max_level;
  for (int n = cells_->entry_level(v); n <= max_level; ++n) {
    const auto& list = cell_order(v, n);
    auto it = std::find(list.begin(), list.end(), g.canonical(v));
    if (it + 1 != list.end()) return *(it + 1);
    if (g.finite() && list.size() == g.vertex_count()) return list.front();
  }
  throw UnresolvedError("successor not determined within max_level", 0);
}

Vertex RefinedOrder::predecessor(const Vertex& v) {
  const auto& g = cells_->graph();
  const int max_level = cells_->policy().max_level;
  for (int n = cells_->entry_level(v); n <= max_level; ++n) {
    const auto& list = cell_order(v, n);
    auto it = std::find(list.begin(), list.end(), g.canonical(v));
    if (it != list.begin()) return *(it - 1);
    if (g.finite() && list.size() == g.vertex_count()) return list.back();
  }
  throw UnresolvedError("predecessor not determined within max_level", 0);
}

const std::vector<Vertex>& RefinedOrder::global_order() {
  const auto& g = cells_->graph();
  if (!g.finite()) throw ConfigError("global order exists on finite graphs only");
  if (top_level_ < 0) {
    top_level_ = cells_->saturation_level();
    if (top_level_ < 0) throw UnresolvedError("torus not covered by a single cell within max_level", 0);
  }
  return cell_order(g.origin(), top_level_);
}

}  // namespace fincode
