#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "fincode/ky_sampler.hpp"

using namespace fincode;

namespace {

KySample run_string(const TargetDistribution& d, const std::string& bits) {
  std::size_t i = 0;
  return ky_sample(d, [&] {
    REQUIRE(i < bits.size());
    return bits[i++] == '1';
  });
}

// Outcome reached by every binary string of length L (or -1 when the walk has
// not halted), counted by outcome.
std::vector<std::uint64_t> exhaustive_counts(const TargetDistribution& d, int L) {
  std::vector<std::uint64_t> counts(d.size() + 1, 0);
  for (std::uint64_t s = 0; s < (1ULL << L); ++s) {
    DdgSimulation sim(d);
    for (int k = L - 1; k >= 0 && !sim.halted(); --k) sim.feed((s >> k) & 1);
    counts[sim.halted() ? sim.output() : d.size()]++;
  }
  return counts;
}

}  // namespace

TEST_CASE("canonical codes for {1/2, 1/4, 1/4}") {
  auto d = TargetDistribution::from_rationals({2, 1, 1}, 4);
  auto a = run_string(d, "0");
  CHECK(a.outcome == 0);
  CHECK(a.bits == 1);
  auto b = run_string(d, "10");
  CHECK(b.outcome == 1);
  CHECK(b.bits == 2);
  auto c = run_string(d, "11");
  CHECK(c.outcome == 2);
  CHECK(c.bits == 2);
  CHECK(leaf_census(d).expected_bits == doctest::Approx(1.5));
}

TEST_CASE("thirds: one leaf per depth, mean depth 2") {
  auto d = TargetDistribution::from_rationals({2, 1}, 3);
  auto census = leaf_census(d, 60);
  for (int k = 1; k < 60; ++k) CHECK(census.leaves[k] == 1);
  CHECK(census.expected_bits == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(census.residual_mass < 1e-15);
}

TEST_CASE("point mass consumes no bits") {
  auto d = TargetDistribution::from_rationals({0, 5, 0}, 5);
  CHECK(d.point_mass() == 1);
  auto s = ky_sample(d, []() -> bool {
    FAIL("no bit should be requested");
    return false;
  });
  CHECK(s.outcome == 1);
  CHECK(s.bits == 0);
}

TEST_CASE("dyadic laws are reproduced exactly over all bit strings") {
  auto d = TargetDistribution::from_rationals({3, 5, 0, 1, 7}, 16);
  auto counts = exhaustive_counts(d, 4);
  CHECK(counts[0] == 3);
  CHECK(counts[1] == 5);
  CHECK(counts[2] == 0);
  CHECK(counts[3] == 1);
  CHECK(counts[4] == 7);
  CHECK(counts[5] == 0);
}

TEST_CASE("non-dyadic law: mass halted by depth L is the truncated expansion") {
  auto d = TargetDistribution::from_rationals({1, 1, 1}, 3);
  const int L = 12;
  auto counts = exhaustive_counts(d, L);
  for (int i = 0; i < 3; ++i) CHECK(counts[i] == (1ULL << L) / 3);
  CHECK(counts[3] == (1ULL << L) - 3 * ((1ULL << L) / 3));
}

TEST_CASE("stopping time is a prefix property") {
  std::mt19937_64 rng(7);
  auto d = TargetDistribution::from_doubles({0.1, 0.25, 0.3, 0.05, 0.3});
  for (int trial = 0; trial < 200; ++trial) {
    std::string bits;
    for (int i = 0; i < 256; ++i) bits += (rng() & 1) ? '1' : '0';
    auto s = run_string(d, bits);
    std::string prefix = bits.substr(0, s.bits);
    for (int c = 0; c < 5; ++c) {
      std::string other = prefix;
      for (int i = 0; i < 64; ++i) other += (rng() & 1) ? '1' : '0';
      auto t = run_string(d, other);
      CHECK(t.outcome == s.outcome);
      CHECK(t.bits == s.bits);
    }
  }
}

TEST_CASE("expected bits stay within H + 2") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t k = 1 + rng() % 16;
    std::vector<double> p(k);
    double s = 0;
    for (auto& x : p) s += (x = std::uniform_real_distribution<double>(0, 1)(rng));
    for (auto& x : p) x /= s;
    auto d = TargetDistribution::from_doubles(p);
    auto census = leaf_census(d);
    CHECK(census.expected_bits <= d.entropy() + 2.0 + 1e-12);
  }
}

TEST_CASE("from_doubles keeps total mass") {
  auto d = TargetDistribution::from_doubles({0.2, 0.3, 0.5});
  u128 total = 0;
  for (auto w : d.numerators()) total += w;
  CHECK(total == d.denominator());
  CHECK(d.probability(1) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("sampler output law, Monte-Carlo control") {
  auto d = TargetDistribution::from_rationals({1, 2, 4, 1}, 8);
  auto r = ddg_output_distribution_check(d, 100000, 17);
  CHECK(r.tv < 3 * std::sqrt(4.0 / 100000));
  CHECK(r.mean_bits == doctest::Approx(leaf_census(d).expected_bits).epsilon(0.02));
}
