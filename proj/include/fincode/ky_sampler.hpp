#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace fincode {

using u128 = unsigned __int128;

// Finite law given by integer numerators over a common denominator. Inputs
// in double precision are canonicalised to 64-bit dyadics.
class TargetDistribution {
 public:
  static TargetDistribution from_doubles(const std::vector<double>& p);
  static TargetDistribution from_weights(const std::vector<u128>& w);
  static TargetDistribution from_rationals(const std::vector<std::uint64_t>& num, std::uint64_t den);

  std::size_t size() const { return num_.size(); }
  double probability(std::size_t i) const;
  double entropy() const;
  const std::vector<u128>& numerators() const { return num_; }
  u128 denominator() const { return den_; }
  // Index of the outcome carrying all mass, or -1.
  long point_mass() const;

 private:
  std::vector<u128> num_;
  u128 den_ = 1;
};

// Discrete distribution generating walk with the canonical leaf labelling.
// The tree is never built: at depth k each outcome's k-th binary digit is
// produced from its remainder by doubling, and the walk halts when the
// running node index drops below zero.
class DdgSimulation {
 public:
  explicit DdgSimulation(const TargetDistribution& d);

  bool halted() const { return halted_; }
  std::size_t output() const { return out_; }
  std::uint64_t bits_consumed() const { return depth_; }
  void feed(bool bit);

 private:
  std::vector<u128> rem_;
  u128 den_;
  std::int64_t node_ = 0;
  std::uint64_t depth_ = 0;
  bool halted_ = false;
  std::size_t out_ = 0;
};

struct KySample {
  std::size_t outcome;
  std::uint64_t bits;
};
KySample ky_sample(const TargetDistribution& d, const std::function<bool()>& next_bit);

struct LeafCensus {
  std::vector<std::uint64_t> leaves;  // leaves[k] = leaves at depth k
  double expected_bits = 0.0;
  double residual_mass = 0.0;  // mass below max_depth
};
LeafCensus leaf_census(const TargetDistribution& d, int max_depth = 256);

struct DdgCheck {
  double tv = 0.0;
  double mean_bits = 0.0;
  double mean_bits_se = 0.0;
  double entropy = 0.0;
  std::size_t n = 0;
};
DdgCheck ddg_output_distribution_check(const TargetDistribution& d, std::size_t n_samples, std::uint64_t seed);

}  // namespace fincode
