#pragma once

#include <cstdint>
#include <optional>

#include "fincode/graph.hpp"

namespace fincode {

// Independent sub-streams of the per-vertex randomness.
enum class Stream : std::uint64_t { Bits = 1, Cell = 2, Ord = 3, Calibration = 4, Aux = 5 };

std::uint64_t mix64(std::uint64_t z);

// Tracks the farthest vertex (fuzzed distance from a centre) whose randomness
// was consulted.
struct RadiusProbe {
  const LatticeGraph* graph = nullptr;
  Vertex center;
  std::int64_t max_radius = 0;
  std::uint64_t queries = 0;

  void touch(const Vertex& v) {
    ++queries;
    auto r = graph->distance(center, v);
    if (r > max_radius) max_radius = r;
  }
};

// Counter-based iid field: each (stream, vertex, index) maps to a fixed
// 64-bit word. With a pullback gamma^{-1} installed, the field at v reads the
// base field at gamma^{-1} v, which realises the shifted configuration.
class RandomField {
 public:
  RandomField(const LatticeGraph& g, std::uint64_t seed) : g_(&g), seed_(seed) {}

  void set_pullback(const Automorphism& gamma_inverse) { pullback_ = gamma_inverse; }
  void set_probe(RadiusProbe* probe) { probe_ = probe; }
  RadiusProbe* probe() const { return probe_; }

  std::uint64_t word(Stream s, const Vertex& v, std::uint64_t index) const;
  // Bernoulli(p); exact at p = 0 and p = 1.
  bool bernoulli(Stream s, const Vertex& v, std::uint64_t index, double p) const;

  const LatticeGraph& graph() const { return *g_; }
  std::uint64_t seed() const { return seed_; }

 private:
  const LatticeGraph* g_;
  std::uint64_t seed_;
  std::optional<Automorphism> pullback_;
  RadiusProbe* probe_ = nullptr;
};

// Two-point word-length law: length m with probability p, else 0, with
// p = (h_upper + 4 eps) / m so that E|W| = h_upper + 4 eps.
struct EntropyBudget {
  int m = 0;
  double eps = 0.0;
  double h_upper = 0.0;
  double p = 0.0;

  static EntropyBudget make(double h_upper, double eps, int m);
  static EntropyBudget with_probability(double h_upper, double eps, int m, double p);
  double expected_length() const { return p * m; }
  double word_entropy() const;  // E|W| + H_b(p)
};

double binary_entropy(double p);

int bits_word_length(const RandomField& f, const Vertex& v, const EntropyBudget& b);
// i is 1-based; for the unbounded stream any i >= 1 is valid.
bool bits_word_bit(const RandomField& f, const Vertex& v, std::uint64_t i);
bool cell_layer_bit(const RandomField& f, const Vertex& v, int level, double eps_level);
bool ord_bit(const RandomField& f, const Vertex& v, std::uint64_t i, double eps);

struct PrfSelfTest {
  double monobit_z = 0.0;
  double serial_correlation = 0.0;
  bool pass = false;
};
PrfSelfTest prf_self_test(std::uint64_t seed, std::size_t n_words = 1 << 16);

}  // namespace fincode
