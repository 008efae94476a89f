#include "fincode/randomness.hpp"

#include <bit>
#include <cmath>

#include "fincode/errors.hpp"

namespace fincode {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t RandomField::word(Stream s, const Vertex& v, std::uint64_t index) const {
  Vertex at = pullback_ ? pullback_->apply(v) : v;
  if (probe_) probe_->touch(v);
  std::uint64_t h = mix64(seed_ ^ 0x243f6a8885a308d3ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(s) * 0x9e3779b97f4a7c15ULL));
  for (int i = 0; i < g_->dim(); ++i)
    h = mix64(h ^ (static_cast<std::uint64_t>(at[i]) * 0xc2b2ae3d27d4eb4fULL + static_cast<std::uint64_t>(i)));
  h = mix64(h ^ (index * 0x165667b19e3779f9ULL + 0x27d4eb2f165667c5ULL));
  return h;
}

bool RandomField::bernoulli(Stream s, const Vertex& v, std::uint64_t index, double p) const {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  double u = static_cast<double>(word(s, v, index) >> 11) * 0x1.0p-53;
  return u < p;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

EntropyBudget EntropyBudget::make(double h_upper, double eps, int m) {
  if (m < 1) throw ConfigError("budget: m must be >= 1");
  if (!(eps > 0)) throw ConfigError("budget: eps must be > 0");
  double p = (h_upper + 4 * eps) / m;
  if (p > 1.0) throw ConfigError("budget: p = (h+4eps)/m exceeds 1; increase m");
  return with_probability(h_upper, eps, m, p);
}

EntropyBudget EntropyBudget::with_probability(double h_upper, double eps, int m, double p) {
  if (m < 1) throw ConfigError("budget: m must be >= 1");
  if (p < 0.0 || p > 1.0) throw ConfigError("budget: p must lie in [0,1]");
  EntropyBudget b;
  b.m = m;
  b.eps = eps;
  b.h_upper = h_upper;
  b.p = p;
  return b;
}

double EntropyBudget::word_entropy() const { return expected_length() + binary_entropy(p); }

int bits_word_length(const RandomField& f, const Vertex& v, const EntropyBudget& b) {
  return f.bernoulli(Stream::Bits, v, 0, b.p) ? b.m : 0;
}

bool bits_word_bit(const RandomField& f, const Vertex& v, std::uint64_t i) {
  return (f.word(Stream::Bits, v, i) >> 63) != 0;
}

bool cell_layer_bit(const RandomField& f, const Vertex& v, int level, double eps_level) {
  return f.bernoulli(Stream::Cell, v, static_cast<std::uint64_t>(level), eps_level);
}

bool ord_bit(const RandomField& f, const Vertex& v, std::uint64_t i, double eps) {
  if (i == 1) return f.bernoulli(Stream::Ord, v, 1, eps);
  return (f.word(Stream::Ord, v, i) >> 63) != 0;
}

PrfSelfTest prf_self_test(std::uint64_t seed, std::size_t n_words) {
  auto g = LatticeGraph::line();
  RandomField f(g, seed);
  double ones = 0;
  double prev = 0, sxy = 0, sx = 0, sxx = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n_words; ++i) {
    auto w = f.word(Stream::Aux, Vertex(static_cast<std::int64_t>(i)), 0);
    ones += std::popcount(w);
    double x = static_cast<double>(w >> 11) * 0x1.0p-53;
    if (i) {
      sxy += prev * x;
      ++pairs;
    }
    sx += x;
    sxx += x * x;
    prev = x;
  }
  double nbits = 64.0 * static_cast<double>(n_words);
  PrfSelfTest t;
  t.monobit_z = (ones - nbits / 2) / std::sqrt(nbits / 4);
  double n = static_cast<double>(n_words);
  double mean = sx / n;
  double var = sxx / n - mean * mean;
  t.serial_correlation = (sxy / static_cast<double>(pairs) - mean * mean) / var;
  t.pass = std::fabs(t.monobit_z) < 5.0 && std::fabs(t.serial_correlation) < 5.0 / std::sqrt(n);
  return t;
}

}  // namespace fincode
