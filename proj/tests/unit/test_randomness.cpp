#include <cmath>

#include "doctest.h"
#include "fincode/randomness.hpp"

using namespace fincode;

TEST_CASE("field words are a pure function of seed, stream, vertex, index") {
  auto g = LatticeGraph::torus(1, 24);
  RandomField a(g, 11), b(g, 11), c(g, 12);
  CHECK(a.word(Stream::Bits, Vertex(5), 3) == b.word(Stream::Bits, Vertex(5), 3));
  CHECK(a.word(Stream::Bits, Vertex(5), 3) != c.word(Stream::Bits, Vertex(5), 3));
  CHECK(a.word(Stream::Bits, Vertex(5), 3) != a.word(Stream::Cell, Vertex(5), 3));
}

TEST_CASE("pullback realises the shifted configuration") {
  auto g = LatticeGraph::torus(2, 6);
  auto gamma = Automorphism::translation(g, Vertex(2, 1)).then(Automorphism::reflection(g, 0));
  RandomField base(g, 5), moved(g, 5);
  moved.set_pullback(gamma.inverse());
  for (auto v : g.all_vertices())
    CHECK(moved.word(Stream::Ord, gamma.apply(v), 1) == base.word(Stream::Ord, v, 1));
}

TEST_CASE("bernoulli is exact at the endpoints") {
  auto g = LatticeGraph::line();
  RandomField f(g, 1);
  for (int x = 0; x < 200; ++x) {
    CHECK_FALSE(f.bernoulli(Stream::Aux, Vertex(x), 0, 0.0));
    CHECK(f.bernoulli(Stream::Aux, Vertex(x), 0, 1.0));
  }
}

TEST_CASE("budget hits the target mean length") {
  auto b = EntropyBudget::make(0.7, 0.2, 50);
  CHECK(b.expected_length() == doctest::Approx(0.7 + 0.8));
  CHECK(b.p == doctest::Approx(1.5 / 50));
  CHECK(b.word_entropy() == doctest::Approx(1.5 + binary_entropy(0.03)));
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
  CHECK_THROWS(EntropyBudget::make(0.7, 0.2, 1));
}

TEST_CASE("word lengths take two values with the budget frequency") {
  auto g = LatticeGraph::line();
  RandomField f(g, 99);
  auto b = EntropyBudget::make(0.7, 0.2, 50);
  const int n = 200000;
  int long_words = 0;
  for (int x = 0; x < n; ++x) {
    int len = bits_word_length(f, Vertex(x), b);
    REQUIRE((len == 0 || len == 50));
    long_words += len == 50;
  }
  double phat = static_cast<double>(long_words) / n;
  CHECK(std::abs(phat - b.p) < 4 * std::sqrt(b.p * (1 - b.p) / n));
}

TEST_CASE("generator self-test") {
  auto t = prf_self_test(2024);
  CHECK(t.pass);
  CHECK(std::abs(t.monobit_z) < 4);
}
