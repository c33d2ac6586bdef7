#include <cmath>
#include <random>

#include "doctest.h"
#include "explab/mechanisms.hpp"

using namespace explab;

TEST_CASE("mechanism construction and probabilities") {
  CHECK_THROWS_AS(Mechanism::explicit_table(2, {{{0b01, 0.5}, {0b10, 0.4}}}),
                  ValidationError);
  CHECK_THROWS_AS(Mechanism::product_bernoulli(2, {0.5, 1.2}), ValidationError);
  CHECK_THROWS_AS(Mechanism::complete_randomization(2, 3), ValidationError);

  Mechanism bern = Mechanism::product_bernoulli(3, {0.5});  // scalar broadcast
  CHECK(bern.prob(0, 0b101) == doctest::Approx(0.125));
  Mechanism comp = Mechanism::complete_randomization(4, 2);
  CHECK(comp.prob(0, 0b0011) == doctest::Approx(1.0 / 6));
  CHECK(comp.prob(0, 0b0111) == 0.0);
  double total = 0;
  for (Bits d = 0; d <= full_mask(4); ++d) total += comp.prob(0, d);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conditional law is a distribution on the conditioning event") {
  Network path(3, {{1, 2}, {2, 3}});
  ContextSet ctxs = ContextSet::single();
  ExposureSpec f;
  f.kind = ExposureKind::kNeighborCount;
  Mechanism mech = Mechanism::product_bernoulli(3, {0.3, 0.5, 0.7});
  Law law = conditional_law(mech, ctxs, 0, f, path, 1, ExposureValue::pair_value(1, 1));
  double total = 0;
  for (const auto& [d, pr] : law) {
    CHECK(exposure_value(f, path, 1, d) == ExposureValue::pair_value(1, 1));
    CHECK(pr > 0);
    // Oracle: Bayes by hand against the product law.
    double event_mass = 0;
    for (Bits e = 0; e <= full_mask(3); ++e)
      if (exposure_value(f, path, 1, e) == ExposureValue::pair_value(1, 1))
        event_mass += mech.prob(0, e);
    CHECK(pr == doctest::Approx(mech.prob(0, d) / event_mass).epsilon(1e-12));
    total += pr;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Zero-mass event: overlap violation names the unit externally.
  Mechanism degenerate = Mechanism::explicit_table(3, {{{0b000, 1.0}}});
  CHECK_THROWS_AS(
      conditional_law(degenerate, ctxs, 0, f, path, 1, ExposureValue::pair_value(1, 1)),
      OverlapViolation);
}

TEST_CASE("CI selection holds for product laws, fails for complete randomization") {
  Network dyad(2, {{1, 2}});
  ContextSet ctxs = ContextSet::single();
  ExposureSpec dim;
  dim.kind = ExposureKind::kDim;
  ExposureValue t1 = ExposureValue::bit_value(1), t0 = ExposureValue::bit_value(0);

  Mechanism bern = Mechanism::product_bernoulli(2, {0.3, 0.6});
  CHECK(check_ci_selection(bern, ctxs, 0, dim, dyad, 0, t1, t0).holds);
  CHECK(check_ci_selection(bern, ctxs, 0, dim, dyad, 1, t1, t0).holds);

  Mechanism comp = Mechanism::complete_randomization(2, 1);
  CiVerdict v = check_ci_selection(comp, ctxs, 0, dim, dyad, 0, t1, t0);
  REQUIRE_FALSE(v.holds);
  REQUIRE(v.witness.has_value());
  // Oracle: under 1-of-2 assignment, P(D=10 | D_1=1) = 1 but the outside
  // marginal gives P(D_2=0) = 1/2.
  CHECK(v.witness->lhs == doctest::Approx(1.0));
  CHECK(v.witness->rhs == doctest::Approx(0.5));
}

TEST_CASE("unit independence detects correlation") {
  CHECK(check_unit_independence(Mechanism::product_bernoulli(3, {0.2, 0.5, 0.9}), 0).holds);
  Mechanism corr = Mechanism::explicit_table(2, {{{0b00, 0.5}, {0b11, 0.5}}});
  IndependenceVerdict v = check_unit_independence(corr, 0);
  REQUIRE_FALSE(v.holds);
  REQUIRE(v.witness.has_value());
  CHECK(v.witness->lhs == doctest::Approx(0.5));   // joint at 00
  CHECK(v.witness->rhs == doctest::Approx(0.25));  // product of marginals
}

namespace {
// Two-unit adoption game: adopting pays 1 if the other adopts, minus a
// type-specific cost. cost[type] per unit, both units symmetric.
SelectionGame two_unit_game(std::vector<double> probs, std::vector<double> costs) {
  SelectionGame g;
  g.n = 2;
  g.type_probs = {{probs, probs}};
  g.util.resize(1);
  g.util[0].resize(2);
  for (int i = 0; i < 2; ++i)
    for (double cost : costs) {
      std::vector<double> table(4);
      for (Bits others = 0; others < 4; ++others)
        table[others] = (has_bit(others, 1 - i) ? 1.0 : 0.0) - cost;
      g.util[0][i].push_back(table);
    }
  return g;
}
}  // namespace

TEST_CASE("best-response dynamics and the induced product law") {
  // Low-cost types adopt regardless; high-cost types never do.
  SelectionGame g = two_unit_game({0.4, 0.6}, {-0.2, 1.8});
  GameSolution sol = solve_incomplete_info_game(g, 0);
  CHECK(sol.profile[0] == std::vector<int>{1, 0});
  CHECK(sol.adopt_prob[0] == doctest::Approx(0.4));
  CHECK_FALSE(sol.multiple_equilibria);

  Mechanism mech = game_induced_mechanism(g);
  CHECK(mech.type() == Mechanism::Type::kGameInduced);
  CHECK(mech.prob(0, 0b11) == doctest::Approx(0.16));
  CHECK(mech.prob(0, 0b00) == doctest::Approx(0.36));
  CHECK(check_unit_independence(mech, 0).holds);

  // Coordination with moderate costs: all-zero start stays at no adoption,
  // but the all-ones start sustains adoption -> multiplicity flagged.
  SelectionGame coord = two_unit_game({1.0}, {0.5});
  GameSolution sol2 = solve_incomplete_info_game(coord, 0);
  CHECK(sol2.adopt_prob[0] == doctest::Approx(0.0));
  CHECK(sol2.multiple_equilibria);

  // Anti-coordination with certain types cycles: no pure fixed point.
  SelectionGame anti = two_unit_game({1.0}, {0.5});
  for (int i = 0; i < 2; ++i)
    for (Bits others = 0; others < 4; ++others)
      anti.util[0][i][0][others] = has_bit(others, 1 - i) ? -0.5 : 0.5;
  CHECK_THROWS_AS(solve_incomplete_info_game(anti, 0), NoConvergence);
}

TEST_CASE("game validation") {
  SelectionGame g = two_unit_game({0.5, 0.6}, {0.1, 0.2});  // probs sum to 1.1
  CHECK_THROWS_AS(g.validate(), ValidationError);
}

TEST_CASE("urn coupling: exact marginals and joint consistency") {
  Network path(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}});
  std::vector<double> p{0.2, 0.4, 0.5, 0.4, 0.8};  // neighbors of ego share 0.4
  CouplingLaw law = exact_coupling_law(path, 2, 1, 2, 1, p);
  ContextSet ctxs = ContextSet::single();
  ExposureSpec f;
  f.kind = ExposureKind::kNeighborCount;
  Mechanism mech = Mechanism::product_bernoulli(5, p);
  Law hi = conditional_law(mech, ctxs, 0, f, path, 2, ExposureValue::pair_value(1, 2));
  Law lo = conditional_law(mech, ctxs, 0, f, path, 2, ExposureValue::pair_value(1, 1));
  CHECK(total_variation(law.high, hi) <= kTol);
  CHECK(total_variation(law.low, lo) <= kTol);

  // The joint marginalizes onto both laws and respects the order.
  Law m_low, m_high;
  for (const auto& [pair, w] : law.joint) {
    CHECK((pair.first & ~pair.second) == 0);
    m_low[pair.first] += w;
    m_high[pair.second] += w;
  }
  CHECK(total_variation(m_low, law.low) <= kTol);
  CHECK(total_variation(m_high, law.high) <= kTol);
}

TEST_CASE("sampled coupling approaches the exact joint") {
  Network star(4, {{1, 2}, {1, 3}, {1, 4}});
  CouplingLaw law = exact_coupling_law(star, 0, 1, 2, 1, 0.4);
  std::mt19937_64 rng(11);
  std::map<std::pair<Bits, Bits>, double> freq;
  const int draws = 40000;
  for (int s = 0; s < draws; ++s) {
    CoupledPair cp = sample_coupled_pair(star, 0, 1, 2, 1, 0.4, rng);
    freq[{cp.low, cp.high}] += 1.0 / draws;
  }
  double tv = 0;
  for (const auto& [key, w] : law.joint) tv += std::abs(w - freq[key]);
  for (const auto& [key, w] : freq)
    if (!law.joint.count(key)) tv += w;
  CHECK(tv / 2 < 0.02);
}

TEST_CASE("coupling preconditions") {
  Network star(4, {{1, 2}, {1, 3}, {1, 4}});
  CHECK_THROWS_AS(exact_coupling_law(star, 0, 1, 1, 1, 0.5), ValidationError);
  CHECK_THROWS_AS(exact_coupling_law(star, 0, 1, 4, 1, 0.5), ValidationError);
  CHECK_THROWS_AS(exact_coupling_law(star, 0, 1, 2, 1, 1.0), ValidationError);
  CHECK_THROWS_AS(exact_coupling_law(star, 0, 2, 2, 1, 0.5), ValidationError);
  // Unequal probabilities on the ego's neighbors break exchangeability.
  CHECK_THROWS_AS(exact_coupling_law(star, 0, 1, 2, 1, {0.5, 0.2, 0.3, 0.4}),
                  ValidationError);
}

TEST_CASE("unconfoundedness compares mechanisms across epsilon-states") {
  ContextSet ctxs({{"a", 0.5, {1}, "e0"}, {"b", 0.5, {1}, "e1"}});
  Mechanism same = Mechanism::product_bernoulli(2, {0.5}, 2);
  CHECK(check_unconfoundedness(ctxs, same).holds);

  Mechanism differs = Mechanism::explicit_table(
      2, {{{0b00, 0.5}, {0b11, 0.5}}, {{0b00, 0.25}, {0b11, 0.75}}});
  UnconfoundednessVerdict v = check_unconfoundedness(ctxs, differs);
  CHECK_FALSE(v.holds);
  CHECK(v.ctx_a == 0);
  CHECK(v.ctx_b == 1);

  // Different covariates may carry different laws.
  ContextSet distinct({{"a", 0.5, {0}, ""}, {"b", 0.5, {1}, ""}});
  CHECK(check_unconfoundedness(distinct, differs).holds);
}
