#include <random>

#include "doctest.h"
#include "explab/network.hpp"

using namespace explab;

namespace {
Network random_net(int n, std::mt19937_64& rng, double p = 0.4) {
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return Network(n, edges);
}
}  // namespace

TEST_CASE("construction rejects malformed edge lists") {
  CHECK_THROWS_AS(Network(3, {{1, 1}}), ValidationError);
  CHECK_THROWS_AS(Network(3, {{1, 2}, {2, 1}}), ValidationError);
  CHECK_THROWS_AS(Network(3, {{1, 4}}), ValidationError);
  CHECK_THROWS_AS(Network(25, {}), CapExceeded);
  Network net(3, {{1, 2}});
  CHECK(net.linked(0, 1));
  CHECK(net.linked(1, 0));
  CHECK_FALSE(net.linked(0, 2));
  CHECK(net.degree(2) == 0);
}

TEST_CASE("neighborhoods on a path") {
  Network path(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}});
  CHECK(path.neighborhood(2, 0) == bit(2));
  CHECK(path.neighborhood(2, 1) == (bit(1) | bit(2) | bit(3)));
  CHECK(path.neighborhood(2, 2) == full_mask(5));
  CHECK(path.neighborhood(0, 1) == (bit(0) | bit(1)));
  CHECK(path.distance(0, 4) == 4);
  CHECK(path.diameter() == 4);
}

TEST_CASE("disconnected components") {
  Network net(4, {{1, 2}});
  CHECK(net.distance(0, 2) == -1);
  CHECK(net.distance(2, 2) == 0);
  CHECK(net.diameter() == 1);
  CHECK(net.neighborhood(2, 5) == bit(2));
}

TEST_CASE("neighborhood growth and membership symmetry") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    Network net = random_net(6, rng);
    for (int i = 0; i < 6; ++i) {
      for (int k = 0; k + 1 <= 6; ++k) {
        Bits a = net.neighborhood(i, k), b = net.neighborhood(i, k + 1);
        CHECK((a & ~b) == 0);  // monotone in k
      }
      for (int j = 0; j < 6; ++j)
        for (int k = 0; k <= 6; ++k)
          CHECK(has_bit(net.neighborhood(i, k), j) == has_bit(net.neighborhood(j, k), i));
    }
  }
}

TEST_CASE("split and recombine are inverse, exhaustively at n = 4") {
  for (Bits s = 0; s <= full_mask(4); ++s)
    for (Bits d = 0; d <= full_mask(4); ++d) {
      Split sp = split(d, s, 4);
      CHECK(recombine(sp.inside, sp.outside, s, 4) == d);
      CHECK(deposit(sp.inside, s) == (d & s));
      CHECK(extract(d, s) == sp.inside);
      CHECK(popcount(sp.inside) == popcount(d & s));
    }
}

TEST_CASE("labeled isomorphism finds witness permutations") {
  Network tri_a(3, {{1, 2}, {2, 3}, {1, 3}});
  Network tri_b(3, {{1, 2}, {2, 3}, {1, 3}});
  auto pi = labeled_isomorphic(tri_a, bit(0), tri_b, bit(2));
  REQUIRE(pi.has_value());
  // Oracle: the witness carries edges to edges and treatment to treatment.
  for (auto [a, b] : tri_b.edges()) CHECK(tri_a.linked((*pi)[a - 1], (*pi)[b - 1]));
  CHECK((*pi)[2] == 0);

  Network path3(3, {{1, 2}, {2, 3}});
  CHECK_FALSE(labeled_isomorphic(tri_a, bit(0), path3, bit(0)).has_value());
  CHECK_FALSE(labeled_isomorphic(tri_a, bit(0), tri_b, bit(0) | bit(1)).has_value());
}

TEST_CASE("position of treatment matters on a path") {
  Network path(3, {{1, 2}, {2, 3}});
  CHECK(labeled_isomorphic(path, bit(0), path, bit(2)).has_value());   // reversal
  CHECK_FALSE(labeled_isomorphic(path, bit(0), path, bit(1)).has_value());
}

TEST_CASE("labeled isomorphism is reflexive and symmetric") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Bits> treat(0, full_mask(5));
  for (int trial = 0; trial < 20; ++trial) {
    Network a = random_net(5, rng), b = random_net(5, rng);
    Bits ta = treat(rng), tb = treat(rng);
    CHECK(labeled_isomorphic(a, ta, a, ta).has_value());
    CHECK(labeled_isomorphic(a, ta, b, tb).has_value() ==
          labeled_isomorphic(b, tb, a, ta).has_value());
  }
}

TEST_CASE("isomorphism cap") {
  Network big(11, {}), small(3, {});
  CHECK_THROWS_AS(labeled_isomorphic(big, 0, big, 0), CapExceeded);
  CHECK_THROWS_AS(labeled_isomorphic(small, 0, Network(4, {}), 0), ValidationError);
}
