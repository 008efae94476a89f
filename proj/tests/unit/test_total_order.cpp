#include <algorithm>

#include "doctest.h"
#include "fincode/total_order.hpp"

using namespace fincode;

namespace {

CellPolicy voronoi() {
  CellPolicy p;
  p.kind = CellPolicy::Kind::Voronoi;
  p.eps = 0.5;
  return p;
}

}  // namespace

TEST_CASE("base order is a strict total order") {
  auto g = LatticeGraph::torus(2, 8);
  RandomField f(g, 3);
  BaseOrder ord(g, f, OrderConfig{});
  auto vs = g.all_vertices();
  for (const auto& u : vs) {
    CHECK_FALSE(ord.less(u, u));
    for (const auto& v : vs)
      if (u != v) CHECK(ord.less(u, v) != ord.less(v, u));
  }
  std::sort(vs.begin(), vs.end(), [&](const Vertex& a, const Vertex& b) { return ord.less(a, b); });
  for (std::size_t i = 0; i + 1 < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) CHECK(ord.less(vs[i], vs[j]));
}

TEST_CASE("sphere sums count marks on spheres") {
  auto g = LatticeGraph::line();
  RandomField f(g, 14);
  OrderConfig cfg;
  BaseOrder ord(g, f, cfg);
  for (int x = 0; x < 20; ++x)
    for (int n = 0; n < 5; ++n) {
      int expect = 0;
      for (const auto& w : g.sphere(Vertex(x), n)) expect += ord_bit(f, w, 1, cfg.eps_ord);
      CHECK(ord.sphere_sum(Vertex(x), n) == expect);
    }
}

TEST_CASE("base order commutes with automorphisms") {
  auto g = LatticeGraph::torus(2, 8);
  auto gamma = Automorphism::translation(g, Vertex(3, 5)).then(Automorphism::axis_permutation(g, {1, 0}));
  RandomField base(g, 77), moved(g, 77);
  moved.set_pullback(gamma.inverse());
  BaseOrder a(g, base, OrderConfig{}), b(g, moved, OrderConfig{});
  for (const auto& u : g.all_vertices())
    for (const auto& v : g.all_vertices())
      if (u < v) CHECK(a.less(u, v) == b.less(gamma.apply(u), gamma.apply(v)));
}

TEST_CASE("refined comparator agrees with the constructive order") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto g = LatticeGraph::torus(2, 10);
    RandomField f(g, seed);
    CellProcessView cells(g, f, voronoi());
    BaseOrder base(g, f, OrderConfig{});
    RefinedOrder ord(cells, base);
    const auto& list = ord.global_order();
    REQUIRE(list.size() == g.vertex_count());
    auto sorted = list;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    for (std::size_t i = 0; i < list.size(); i += 3)
      for (std::size_t j = i + 1; j < list.size(); j += 7) {
        CHECK(ord.less(list[i], list[j]));
        CHECK_FALSE(ord.less(list[j], list[i]));
      }
    for (std::size_t i = 0; i + 1 < list.size(); ++i) CHECK(ord.successor(list[i]) == list[i + 1]);
    CHECK(ord.successor(list.back()) == list.front());
    CHECK(ord.predecessor(list.front()) == list.back());
  }
}

TEST_CASE("older cells precede the fresh part inside every cell") {
  auto g = LatticeGraph::torus(1, 64);
  RandomField f(g, 9);
  CellProcessView cells(g, f, CellPolicy{});
  BaseOrder base(g, f, OrderConfig{});
  RefinedOrder ord(cells, base);
  for (const auto& v : g.all_vertices()) {
    int n = cells.entry_level(v) + 1;
    if (n > 8) continue;
    const auto& list = ord.cell_order(v, n);
    bool seen_fresh = false;
    for (const auto& u : list) {
      bool old = cells.in_level(u, n - 1);
      if (!old) seen_fresh = true;
      CHECK_FALSE((old && seen_fresh));
    }
  }
}

TEST_CASE("uniform-label mode is also total") {
  auto g = LatticeGraph::torus(1, 32);
  RandomField f(g, 4);
  OrderConfig cfg;
  cfg.mode = OrderConfig::Mode::UniformLabel;
  BaseOrder ord(g, f, cfg);
  auto vs = g.all_vertices();
  for (const auto& u : vs)
    for (const auto& v : vs)
      if (u != v) CHECK(ord.less(u, v) != ord.less(v, u));
  CHECK(ord.label_bits_used() > 0);
}
