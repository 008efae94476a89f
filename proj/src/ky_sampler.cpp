#include "fincode/ky_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fincode/errors.hpp"
#include "fincode/randomness.hpp"

namespace fincode {

namespace {
constexpr u128 kDyadic = static_cast<u128>(1) << 64;
constexpr u128 kMaxDen = static_cast<u128>(1) << 126;

long double to_ld(u128 x) {
  return static_cast<long double>(static_cast<std::uint64_t>(x >> 64)) * 0x1.0p64L +
         static_cast<long double>(static_cast<std::uint64_t>(x));
}
}  // namespace

TargetDistribution TargetDistribution::from_doubles(const std::vector<double>& p) {
  if (p.empty()) throw ConfigError("distribution has no outcomes");
  double total = 0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("negative or non-finite probability");
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("probabilities do not sum to 1");
  TargetDistribution d;
  d.den_ = kDyadic;
  d.num_.resize(p.size());
  __int128 sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    long double scaled = std::floor(std::ldexp(static_cast<long double>(p[i]), 64) + 0.5L);
    d.num_[i] = static_cast<u128>(scaled);
    sum += static_cast<__int128>(d.num_[i]);
  }
  __int128 deficit = static_cast<__int128>(kDyadic) - sum;
  std::size_t fix = p.size() - 1;
  if (static_cast<__int128>(d.num_[fix]) + deficit < 0) {
    fix = static_cast<std::size_t>(std::max_element(d.num_.begin(), d.num_.end()) - d.num_.begin());
  }
  d.num_[fix] = static_cast<u128>(static_cast<__int128>(d.num_[fix]) + deficit);
  return d;
}

TargetDistribution TargetDistribution::from_weights(const std::vector<u128>& w) {
  if (w.empty()) throw ConfigError("distribution has no outcomes");
  u128 total = 0;
  for (auto x : w) {
    if (x > kMaxDen - total) throw CapacityError("integer weights exceed 2^126");
    total += x;
  }
  if (total == 0) throw ZeroProbabilityError("all weights are zero");
  TargetDistribution d;
  d.num_ = w;
  d.den_ = total;
  return d;
}

TargetDistribution TargetDistribution::from_rationals(const std::vector<std::uint64_t>& num, std::uint64_t den) {
  std::vector<u128> w(num.begin(), num.end());
  u128 total = 0;
  for (auto x : w) total += x;
  if (total != den) throw ConfigError("rational probabilities do not sum to 1");
  return from_weights(w);
}

double TargetDistribution::probability(std::size_t i) const {
  return static_cast<double>(to_ld(num_[i]) / to_ld(den_));
}

double TargetDistribution::entropy() const {
  long double h = 0;
  for (auto x : num_) {
    if (x == 0) continue;
    long double q = to_ld(x) / to_ld(den_);
    h -= q * std::log2(q);
  }
  return static_cast<double>(h);
}

long TargetDistribution::point_mass() const {
  for (std::size_t i = 0; i < num_.size(); ++i)
    if (num_[i] == den_) return static_cast<long>(i);
  return -1;
}

DdgSimulation::DdgSimulation(const TargetDistribution& d) : rem_(d.numerators()), den_(d.denominator()) {
  long pm = d.point_mass();
  if (pm >= 0) {
    halted_ = true;
    out_ = static_cast<std::size_t>(pm);
  }
}

void DdgSimulation::feed(bool bit) {
  if (halted_) throw InvariantViolation("bit fed to a halted sampler");
  ++depth_;
  if (depth_ > 8192) throw InvariantViolation("sampler exceeded depth 8192");
  node_ = 2 * node_ + (bit ? 1 : 0);
  for (std::size_t i = 0; i < rem_.size(); ++i) {
    u128 r = rem_[i] << 1;
    bool digit = r >= den_;
    if (digit) r -= den_;
    rem_[i] = r;
    if (digit && --node_ < 0) {
      halted_ = true;
      out_ = i;
      return;
    }
  }
}

KySample ky_sample(const TargetDistribution& d, const std::function<bool()>& next_bit) {
  DdgSimulation sim(d);
  while (!sim.halted()) sim.feed(next_bit());
  return {sim.output(), sim.bits_consumed()};
}

LeafCensus leaf_census(const TargetDistribution& d, int max_depth) {
  LeafCensus c;
  std::vector<u128> rem = d.numerators();
  u128 den = d.denominator();
  long double mass = 0;
  long double expect = 0;
  c.leaves.push_back(d.point_mass() >= 0 ? 1 : 0);
  if (c.leaves[0]) {
    c.residual_mass = 0;
    return c;
  }
  for (int k = 1; k <= max_depth; ++k) {
    std::uint64_t leaves = 0;
    bool any = false;
    for (auto& r : rem) {
      r <<= 1;
      if (r >= den) {
        r -= den;
        ++leaves;
      }
      any = any || r != 0;
    }
    c.leaves.push_back(leaves);
    long double w = std::ldexp(static_cast<long double>(leaves), -k);
    mass += w;
    expect += k * w;
    if (!any) break;
  }
  c.expected_bits = static_cast<double>(expect);
  c.residual_mass = static_cast<double>(1.0L - mass);
  return c;
}

DdgCheck ddg_output_distribution_check(const TargetDistribution& d, std::size_t n_samples, std::uint64_t seed) {
  std::vector<std::size_t> counts(d.size(), 0);
  std::uint64_t state = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  std::uint64_t buf = 0;
  int left = 0;
  auto next_bit = [&]() {
    if (left == 0) {
      state += 0x9e3779b97f4a7c15ULL;
      buf = mix64(state);
      left = 64;
    }
    bool b = buf & 1;
    buf >>= 1;
    --left;
    return b;
  };
  double sum = 0, sum2 = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    auto r = ky_sample(d, next_bit);
    ++counts[r.outcome];
    double b = static_cast<double>(r.bits);
    sum += b;
    sum2 += b * b;
  }
  DdgCheck out;
  out.n = n_samples;
  double n = static_cast<double>(n_samples);
  for (std::size_t i = 0; i < d.size(); ++i)
    out.tv += std::fabs(static_cast<double>(counts[i]) / n - d.probability(i));
  out.tv /= 2;
  out.mean_bits = sum / n;
  out.mean_bits_se = std::sqrt(std::max(0.0, sum2 / n - out.mean_bits * out.mean_bits) / n);
  out.entropy = d.entropy();
  return out;
}

}  // namespace fincode
