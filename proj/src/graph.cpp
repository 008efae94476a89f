#include "fincode/graph.hpp"

#include <cstdlib>
#include <sstream>

#include "fincode/errors.hpp"

namespace fincode {

std::string format_vertex(const Vertex& v, int dim) {
  std::string s;
  for (int i = 0; i < dim; ++i) {
    if (i) s += ';';
    s += std::to_string(v[i]);
  }
  return s;
}

LatticeGraph::LatticeGraph(GraphKind kind, int d, std::int64_t n, int k) : kind_(kind), d_(d), n_(n), k_(k) {
  if (d < 1 || d > kMaxDim) throw ConfigError("graph dimension must be in 1.." + std::to_string(kMaxDim));
  if (k < 1) throw ConfigError("fuzz k must be >= 1");
  if (kind == GraphKind::Torus && n < 3) throw ConfigError("torus side must be >= 3");
  nbr_offsets_ = base_ball_offsets(k_, 1);
  if (finite()) {
    // Offsets that wrap onto the same vertex on small tori are merged.
    std::vector<Vertex> canon;
    for (const auto& o : nbr_offsets_) {
      auto c = canonical(o);
      if (c != Vertex{}) canon.push_back(c);
    }
    nbr_offsets_ = sorted_unique(canon);
  }
}

LatticeGraph LatticeGraph::line(int k) { return LatticeGraph(GraphKind::Z, 1, 0, k); }
LatticeGraph LatticeGraph::lattice(int d, int k) { return LatticeGraph(d == 1 ? GraphKind::Z : GraphKind::Zd, d, 0, k); }
LatticeGraph LatticeGraph::torus(int d, std::int64_t n, int k) { return LatticeGraph(GraphKind::Torus, d, n, k); }

std::int64_t LatticeGraph::base_coord_diff(std::int64_t a, std::int64_t b) const {
  std::int64_t x = std::llabs(a - b);
  if (finite()) {
    x %= n_;
    x = std::min(x, n_ - x);
  }
  return x;
}

std::int64_t LatticeGraph::base_distance(const Vertex& u, const Vertex& v) const {
  std::int64_t s = 0;
  for (int i = 0; i < d_; ++i) s += base_coord_diff(u[i], v[i]);
  return s;
}

std::int64_t LatticeGraph::distance(const Vertex& u, const Vertex& v) const {
  auto b = base_distance(u, v);
  return (b + k_ - 1) / k_;
}

Vertex LatticeGraph::canonical(Vertex v) const {
  if (finite()) {
    for (int i = 0; i < d_; ++i) {
      v[i] %= n_;
      if (v[i] < 0) v[i] += n_;
    }
  }
  return v;
}

Vertex LatticeGraph::shifted(const Vertex& v, const Vertex& delta) const {
  Vertex r;
  for (int i = 0; i < d_; ++i) r[i] = v[i] + delta[i];
  return canonical(r);
}

// All offsets with Rmin <= L1 norm <= R, in lexicographic order.
std::vector<Vertex> LatticeGraph::base_ball_offsets(std::int64_t R, std::int64_t Rmin) const {
  std::vector<Vertex> out;
  if (R < 0) return out;
  Vertex cur;
  std::function<void(int, std::int64_t)> rec = [&](int axis, std::int64_t budget) {
    if (axis == d_) {
      if (R - budget >= Rmin) out.push_back(cur);
      return;
    }
    for (std::int64_t x = -budget; x <= budget; ++x) {
      cur[axis] = x;
      rec(axis + 1, budget - std::llabs(x));
    }
    cur[axis] = 0;
  };
  rec(0, R);
  return out;
}

std::vector<Vertex> LatticeGraph::ball(const Vertex& v, std::int64_t r) const {
  if (r < 0) return {};
  std::int64_t R = r * k_;
  if (finite() && R >= d_ * (n_ / 2)) return all_vertices();
  std::vector<Vertex> out;
  for (const auto& o : base_ball_offsets(R, 0)) out.push_back(shifted(v, o));
  if (finite()) out = sorted_unique(std::move(out));
  return out;
}

std::vector<Vertex> LatticeGraph::sphere(const Vertex& v, std::int64_t r) const {
  if (r < 0) return {};
  if (r == 0) return {canonical(v)};
  std::int64_t R = r * k_;
  std::int64_t Rmin = (r - 1) * k_ + 1;
  if (finite()) {
    std::int64_t diam = d_ * (n_ / 2);
    if (Rmin > diam) return {};
    std::vector<Vertex> out;
    for (const auto& o : base_ball_offsets(std::min(R, diam), 0)) {
      auto w = shifted(v, o);
      auto b = base_distance(v, w);
      if (b >= Rmin && b <= R) out.push_back(w);
    }
    return sorted_unique(std::move(out));
  }
  std::vector<Vertex> out;
  for (const auto& o : base_ball_offsets(R, Rmin)) out.push_back(shifted(v, o));
  return out;
}

std::vector<Vertex> LatticeGraph::neighbors(const Vertex& v) const {
  std::vector<Vertex> out;
  out.reserve(nbr_offsets_.size());
  for (const auto& o : nbr_offsets_) out.push_back(shifted(v, o));
  return out;
}

int LatticeGraph::degree() const { return static_cast<int>(nbr_offsets_.size()); }

std::size_t LatticeGraph::vertex_count() const {
  if (!finite()) throw ConfigError("vertex_count on an infinite lattice");
  std::size_t c = 1;
  for (int i = 0; i < d_; ++i) c *= static_cast<std::size_t>(n_);
  return c;
}

std::size_t LatticeGraph::index(const Vertex& v) const {
  std::size_t idx = 0;
  for (int i = d_ - 1; i >= 0; --i) idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v[i]);
  return idx;
}

Vertex LatticeGraph::vertex_at(std::size_t i) const {
  Vertex v;
  for (int a = 0; a < d_; ++a) {
    v[a] = static_cast<std::int64_t>(i % static_cast<std::size_t>(n_));
    i /= static_cast<std::size_t>(n_);
  }
  return v;
}

std::vector<Vertex> LatticeGraph::all_vertices() const {
  std::vector<Vertex> out(vertex_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vertex_at(i);
  return out;
}

std::int64_t LatticeGraph::diameter() const {
  if (!finite()) throw ConfigError("diameter of an infinite lattice");
  std::int64_t b = d_ * (n_ / 2);
  return (b + k_ - 1) / k_;
}

std::string LatticeGraph::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case GraphKind::Z: os << "Z"; break;
    case GraphKind::Zd: os << "Z^" << d_; break;
    case GraphKind::Torus: os << "Z_" << n_ << "^" << d_; break;
  }
  if (k_ > 1) os << " fuzz " << k_;
  return os.str();
}

std::vector<Vertex> sorted_unique(std::vector<Vertex> vs) {
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

std::vector<Vertex> erode_dilate(const LatticeGraph& g, const std::vector<Vertex>& set, std::int64_t r, int sign) {
  if (r == 0) return sorted_unique(set);
  VertexSet in(set.begin(), set.end());
  std::vector<Vertex> out;
  if (sign > 0) {
    for (const auto& v : set)
      for (const auto& w : g.ball(v, r)) out.push_back(w);
    return sorted_unique(std::move(out));
  }
  for (const auto& v : set) {
    bool inside = true;
    for (const auto& w : g.ball(v, r)) {
      if (!in.count(w)) {
        inside = false;
        break;
      }
    }
    if (inside) out.push_back(v);
  }
  return sorted_unique(std::move(out));
}

std::int64_t edge_boundary_size(const LatticeGraph& g, const std::vector<Vertex>& set) {
  VertexSet in(set.begin(), set.end());
  std::int64_t count = 0;
  for (const auto& v : in)
    for (const auto& w : g.neighbors(v))
      if (!in.count(w)) ++count;
  return count;
}

Automorphism::Automorphism(const LatticeGraph& g) : g_(&g) {
  for (int i = 0; i < kMaxDim; ++i) {
    perm_[i] = i;
    sign_[i] = 1;
  }
}

Automorphism Automorphism::identity(const LatticeGraph& g) { return Automorphism(g); }

Automorphism Automorphism::translation(const LatticeGraph& g, const Vertex& t) {
  Automorphism a(g);
  a.shift_ = t;
  return a;
}

Automorphism Automorphism::reflection(const LatticeGraph& g, int axis) {
  if (axis < 0 || axis >= g.dim()) throw ConfigError("reflection axis out of range");
  Automorphism a(g);
  a.sign_[axis] = -1;
  return a;
}

Automorphism Automorphism::axis_permutation(const LatticeGraph& g, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != g.dim()) throw ConfigError("axis permutation has wrong length");
  std::vector<int> seen(perm.size(), 0);
  for (int p : perm) {
    if (p < 0 || p >= g.dim() || seen[p]++) throw ConfigError("not a permutation of axes");
  }
  Automorphism a(g);
  for (int i = 0; i < g.dim(); ++i) a.perm_[i] = perm[i];
  return a;
}

// Output axis i takes sign_[i] * input axis perm_[i], plus shift.
Vertex Automorphism::apply(const Vertex& v) const {
  if (window_) {
    for (int i = 0; i < g_->dim(); ++i)
      if (std::llabs(v[i]) > *window_) throw OutOfWindowError("automorphism applied outside its window");
  }
  Vertex r;
  for (int i = 0; i < g_->dim(); ++i) r[i] = sign_[i] * v[perm_[i]] + shift_[i];
  return g_->canonical(r);
}

Automorphism Automorphism::inverse() const {
  // y_i = s_i x_{p(i)} + t_i  =>  x_j = s_i (y_i - t_i) with p(i) = j.
  Automorphism a(*g_);
  for (int i = 0; i < g_->dim(); ++i) {
    int j = perm_[i];
    a.perm_[j] = i;
    a.sign_[j] = sign_[i];
    a.shift_[j] = -sign_[i] * shift_[i];
  }
  for (int i = 0; i < g_->dim(); ++i) a.shift_[i] = g_->canonical(a.shift_)[i];
  a.window_ = window_;
  return a;
}

Automorphism Automorphism::then(const Automorphism& next) const {
  // next(this(x))_i = s'_i (s_{p'(i)} x_{p(p'(i))} + t_{p'(i)}) + t'_i
  Automorphism a(*g_);
  for (int i = 0; i < g_->dim(); ++i) {
    int j = next.perm_[i];
    a.perm_[i] = perm_[j];
    a.sign_[i] = next.sign_[i] * sign_[j];
    a.shift_[i] = next.sign_[i] * shift_[j] + next.shift_[i];
  }
  a.shift_ = g_->canonical(a.shift_);
  return a;
}

std::string Automorphism::describe() const {
  std::ostringstream os;
  os << "x ->";
  for (int i = 0; i < g_->dim(); ++i)
    os << (i ? ", " : " (") << (sign_[i] < 0 ? "-" : "") << "x" << perm_[i] << "+" << shift_[i];
  os << ")";
  return os.str();
}

SphereCheck check_sphere_distinctness(const LatticeGraph& g, std::int64_t max_r) {
  SphereCheck out;
  if (!g.finite()) return out;  // translates of a finite ball never coincide on Z^d
  // Transitivity: compare the ball at the origin with its translates.
  auto verts = g.all_vertices();
  for (std::int64_t r = 0; r <= max_r; ++r) {
    auto b0 = g.ball(g.origin(), r);
    VertexSet s0(b0.begin(), b0.end());
    for (const auto& v : verts) {
      if (v == g.origin()) continue;
      bool same = true;
      for (const auto& w : b0) {
        if (!s0.count(g.shifted(w, v))) {
          same = false;
          break;
        }
      }
      if (same) {
        out.holds = false;
        out.threshold = r;
        return out;
      }
    }
  }
  return out;
}

}  // namespace fincode
