#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fincode {

inline constexpr int kMaxDim = 3;

struct Vertex {
  std::array<std::int64_t, kMaxDim> c{};

  Vertex() = default;
  explicit Vertex(std::int64_t x) { c[0] = x; }
  Vertex(std::int64_t x, std::int64_t y) {
    c[0] = x;
    c[1] = y;
  }
  Vertex(std::int64_t x, std::int64_t y, std::int64_t z) {
    c[0] = x;
    c[1] = y;
    c[2] = z;
  }

  std::int64_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Vertex&, const Vertex&) = default;
  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

struct VertexHash {
  std::size_t operator()(const Vertex& v) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto x : v.c) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 33));
  }
};

using VertexSet = std::unordered_set<Vertex, VertexHash>;

std::string format_vertex(const Vertex& v, int dim);

enum class GraphKind { Z, Zd, Torus };

// Z, Z^d or the discrete torus (Z_n)^d with L1 (per-coordinate cyclic) base
// metric. The fuzz k makes u ~ v whenever 1 <= base distance <= k; fuzzed
// distances are ceil(base / k).
class LatticeGraph {
 public:
  static LatticeGraph line(int k = 1);
  static LatticeGraph lattice(int d, int k = 1);
  static LatticeGraph torus(int d, std::int64_t n, int k = 1);

  GraphKind kind() const { return kind_; }
  int dim() const { return d_; }
  std::int64_t side() const { return n_; }
  int fuzz() const { return k_; }
  bool finite() const { return kind_ == GraphKind::Torus; }

  std::int64_t base_distance(const Vertex& u, const Vertex& v) const;
  std::int64_t distance(const Vertex& u, const Vertex& v) const;
  std::int64_t base_coord_diff(std::int64_t a, std::int64_t b) const;

  Vertex canonical(Vertex v) const;
  Vertex shifted(const Vertex& v, const Vertex& delta) const;
  Vertex origin() const { return Vertex{}; }

  std::vector<Vertex> ball(const Vertex& v, std::int64_t r) const;
  std::vector<Vertex> sphere(const Vertex& v, std::int64_t r) const;
  const std::vector<Vertex>& neighbor_offsets() const { return nbr_offsets_; }
  std::vector<Vertex> neighbors(const Vertex& v) const;
  int degree() const;

  // Finite graphs only.
  std::size_t vertex_count() const;
  std::size_t index(const Vertex& v) const;
  Vertex vertex_at(std::size_t i) const;
  std::vector<Vertex> all_vertices() const;
  std::int64_t diameter() const;  // fuzzed

  std::string describe() const;

 private:
  LatticeGraph(GraphKind kind, int d, std::int64_t n, int k);
  std::vector<Vertex> base_ball_offsets(std::int64_t R, std::int64_t Rmin) const;

  GraphKind kind_;
  int d_;
  std::int64_t n_;
  int k_;
  std::vector<Vertex> nbr_offsets_;
};

std::vector<Vertex> sorted_unique(std::vector<Vertex> vs);

// V^{+r} (sign > 0) is the closed r-neighbourhood; V^{-r} (sign < 0) keeps u
// with dist(u, V^c) > r.
std::vector<Vertex> erode_dilate(const LatticeGraph& g, const std::vector<Vertex>& set, std::int64_t r,
                                 int sign);

// Number of fuzzed edges with exactly one endpoint in the set.
std::int64_t edge_boundary_size(const LatticeGraph& g, const std::vector<Vertex>& set);

// v -> P v + t with P a signed permutation matrix.
class Automorphism {
 public:
  static Automorphism identity(const LatticeGraph& g);
  static Automorphism translation(const LatticeGraph& g, const Vertex& t);
  static Automorphism reflection(const LatticeGraph& g, int axis);
  static Automorphism axis_permutation(const LatticeGraph& g, const std::vector<int>& perm);

  Vertex apply(const Vertex& v) const;
  Automorphism inverse() const;
  Automorphism then(const Automorphism& next) const;  // next o this
  void set_window(std::int64_t half_width) { window_ = half_width; }
  std::string describe() const;

 private:
  explicit Automorphism(const LatticeGraph& g);
  const LatticeGraph* g_;
  std::array<int, kMaxDim> perm_{};
  std::array<int, kMaxDim> sign_{};
  Vertex shift_;
  std::optional<std::int64_t> window_;
};

struct SphereCheck {
  bool holds = true;                      // all balls of distinct vertices differ up to max_r
  std::optional<std::int64_t> threshold;  // first radius where two balls coincide
};
SphereCheck check_sphere_distinctness(const LatticeGraph& g, std::int64_t max_r);

// Vertex-keyed storage: dense on tori, hashed on infinite lattices.
template <class T>
class VertexTable {
 public:
  explicit VertexTable(const LatticeGraph& g) : g_(&g) {
    if (g.finite()) {
      dense_.assign(g.vertex_count(), T{});
      set_.assign(g.vertex_count(), 0);
    }
  }
  const T* find(const Vertex& v) const {
    if (g_->finite()) {
      auto i = g_->index(v);
      return set_[i] ? &dense_[i] : nullptr;
    }
    auto it = map_.find(v);
    return it == map_.end() ? nullptr : &it->second;
  }
  T& put(const Vertex& v, T value) {
    if (g_->finite()) {
      auto i = g_->index(v);
      set_[i] = 1;
      dense_[i] = std::move(value);
      return dense_[i];
    }
    return map_[v] = std::move(value);
  }
  void clear() {
    if (g_->finite()) {
      std::fill(set_.begin(), set_.end(), 0);
    } else {
      map_.clear();
    }
  }

 private:
  const LatticeGraph* g_;
  std::vector<T> dense_;
  std::vector<char> set_;
  std::unordered_map<Vertex, T, VertexHash> map_;
};

}  // namespace fincode
