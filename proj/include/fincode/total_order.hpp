#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "fincode/cell_process.hpp"
#include "fincode/graph.hpp"
#include "fincode/randomness.hpp"

namespace fincode {

struct OrderConfig {
  enum class Mode { SphereSum, UniformLabel };
  Mode mode = Mode::SphereSum;
  double eps_ord = 0.5;
  int max_label_bits = 2048;
  std::int64_t max_radius = 1 << 16;  // sphere-sum search cap on infinite lattices
};

// The base order: lexicographic comparison of sphere sums of the sparse
// marks (eta = ord bit 1), ties broken by lazily revealed uniform label bits
// (ord bits 2, 3, ...). In UniformLabel mode only the labels are used.
class BaseOrder {
 public:
  BaseOrder(const LatticeGraph& g, const RandomField& f, OrderConfig cfg);

  bool less(const Vertex& u, const Vertex& v);
  // Radius around u and v that the comparison consulted.
  std::int64_t certificate_radius(const Vertex& u, const Vertex& v);
  std::int64_t label_bits_used() const { return label_bits_; }
  int sphere_sum(const Vertex& v, std::int64_t n);
  Vertex min_of(const std::vector<Vertex>& set);

 private:
  struct Result {
    bool less;
    std::int64_t radius;
  };
  Result compare(const Vertex& u, const Vertex& v);
  bool label_bit(const Vertex& v, int i);

  const LatticeGraph* g_;
  const RandomField* f_;
  OrderConfig cfg_;
  VertexTable<std::vector<int>> sums_;
  VertexTable<std::vector<signed char>> labels_;
  VertexTable<signed char> eta_;
  std::vector<std::vector<Vertex>> sphere_offsets_;  // sphere around the origin, by radius
  std::int64_t label_bits_ = 0;
};

// The refined order: inside a level-n cell the older part (level n-1 cells,
// ranked by their base-order minima) precedes the fresh part, which is
// ranked by the base order.
class RefinedOrder {
 public:
  RefinedOrder(CellProcessView& cells, BaseOrder& base);

  // Comparator route, used as an independent check of cell_order.
  bool less(const Vertex& u, const Vertex& v);
  // Sorted list of the level-n cell containing v (constructive route).
  const std::vector<Vertex>& cell_order(const Vertex& v, int n);
  Vertex successor(const Vertex& v);
  Vertex predecessor(const Vertex& v);
  // Finite graphs: the order on the saturated top cell.
  const std::vector<Vertex>& global_order();
  int top_level() const { return top_level_; }

 private:
  CellProcessView* cells_;
  BaseOrder* base_;
  std::map<std::pair<int, int>, std::vector<Vertex>> orders_;
  int top_level_ = -1;
};

}  // namespace fincode
