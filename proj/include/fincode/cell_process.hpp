#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fincode/graph.hpp"
#include "fincode/randomness.hpp"

namespace fincode {

struct CellPolicy {
  enum class Kind { Voronoi, SimpleZ };
  Kind kind = Kind::SimpleZ;
  std::vector<double> eps_schedule;  // explicit eps_n for raw levels 1, 2, ...
  double eps = 0.5;                  // parameter of the default Voronoi schedule
  int max_level = 40;
  std::int64_t window_cap = 1 << 16;  // search radius cap on infinite lattices
  std::int64_t volume_cap = 1 << 20;  // component size cap
  int level_shift = 0;

  // eps_n for a raw (unshifted) level.
  double eps_level(int raw_level, const LatticeGraph& g) const;
};

// Lazily evaluated nested cell sets A_1 ⊆ A_2 ⊆ ... (after the level shift).
// Memberships and components are memoised per level.
class CellProcessView {
 public:
  CellProcessView(const LatticeGraph& g, const RandomField& f, CellPolicy p);
  ~CellProcessView();
  CellProcessView(const CellProcessView&) = delete;
  CellProcessView& operator=(const CellProcessView&) = delete;

  const CellPolicy& policy() const { return policy_; }
  const LatticeGraph& graph() const { return *g_; }

  bool in_level(const Vertex& v, int n);
  // Sorted vertex list of the level-n cell containing v (v must be in A_n).
  const std::vector<Vertex>& component(const Vertex& v, int n);
  int component_id(const Vertex& v, int n);
  // Smallest n with v in A_n; Unresolved beyond max_level.
  int entry_level(const Vertex& v);

  struct Entry {
    int level = 0;
    std::vector<Vertex> cell;
    std::vector<Vertex> fresh;  // cell minus A_{level-1}
  };
  Entry entry(const Vertex& v);

  // Voronoi internals on raw levels, exposed for tests.
  bool is_center(const Vertex& v, int raw_level);
  std::optional<Vertex> owner(const Vertex& v, int raw_level);
  bool in_cell_prime(const Vertex& v, int raw_level);

  // Finite graphs: first level with A_n = V, or -1 within max_level.
  int saturation_level();

 private:
  struct Level;
  Level& raw(int raw_level);
  bool in_raw(const Vertex& v, int raw_level);
  int raw_component(const Vertex& v, int raw_level);
  bool component_meets_outside(int comp, int raw_level);
  bool in_danger(const Vertex& v, int raw_level);  // v in D^{+1} for the step raw_level -> raw_level+1

  const LatticeGraph* g_;
  const RandomField* f_;
  CellPolicy policy_;
  std::vector<std::unique_ptr<Level>> levels_;
  std::unique_ptr<VertexTable<int>> simple_first_;  // first raw layer hit (simple_z), 0 = none yet
  std::unique_ptr<VertexTable<int>> simple_checked_;
  std::vector<std::vector<Vertex>> sphere_offsets_;  // sphere around the origin, by radius
};

struct LevelStats {
  int level = 0;
  double p_covered = 0.0;
  double mean_cell_size = 0.0;
  double boundary_q50 = 0.0;
  double boundary_q90 = 0.0;
  double boundary_q99 = 0.0;
  std::size_t samples = 0;
};

// Monte-Carlo statistics of the cell containing the origin, one row per level.
std::vector<LevelStats> cell_level_stats(const LatticeGraph& g, const CellPolicy& p, int levels,
                                         std::uint64_t first_seed, std::size_t n_seeds);

// Median radius of the component of the origin in A_{n-1} ∪ {0} given the
// origin is outside A_{n-1}. Stand-in for the paper's r_n.
double estimate_component_radius_median(const LatticeGraph& g, const CellPolicy& p, int n, std::uint64_t first_seed,
                                         std::size_t n_seeds);

}  // namespace fincode
