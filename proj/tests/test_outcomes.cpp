#include <cmath>
#include <random>

#include "doctest.h"
#include "explab/exposures.hpp"
#include "explab/outcomes.hpp"

using namespace explab;

TEST_CASE("context weights must be a distribution") {
  CHECK_THROWS_AS(ContextSet({{"a", 0.5, {}, ""}, {"b", 0.4, {}, ""}}), ValidationError);
  CHECK_THROWS_AS(ContextSet({{"a", -0.5, {}, ""}, {"b", 1.5, {}, ""}}), ValidationError);
  ContextSet ok({{"a", 0.25, {}, ""}, {"b", 0.75, {}, ""}});
  CHECK(ok.size() == 2);
  CHECK(ok.index_of("b") == 1);
  CHECK(ok.index_of("zzz") == -1);
  CHECK(ContextSet::single().at(0).weight == 1.0);
}

TEST_CASE("outcome table lookups and defaults") {
  OutcomeModel with_default(2, 1, -7.0);
  with_default.set(0, 0, 0b01, 3.5);
  CHECK(with_default.mean_outcome(0, 0, 0b01) == 3.5);
  CHECK(with_default.mean_outcome(0, 1, 0b11) == -7.0);

  OutcomeModel strict(2, 1, std::nullopt);
  strict.set(0, 1, 0b10, 1.0);
  CHECK(strict.mean_outcome(0, 1, 0b10) == 1.0);
  CHECK_THROWS_AS(strict.mean_outcome(0, 0, 0b10), MissingCell);
}

TEST_CASE("distance-decay family matches its closed form") {
  Network path(4, {{1, 2}, {2, 3}, {3, 4}});
  StructuralFamily fam = distance_decay_family(0.5);
  Context c{"c0", 1.0, {}, ""};
  // Unit 1 under d = 1101: own 1, unit 2 at distance 1, unit 4 at distance 3.
  double expect = 1 + 0.5 + 0.0 + 0.125;
  CHECK(fam.full(path, 0, 0b1011, c) == doctest::Approx(expect).epsilon(1e-12));
  // Restricted to members {1,2}: only the distance-1 term survives.
  CHECK(fam.eval(path, bit(0) | bit(1), 0, 0b1011, c) ==
        doctest::Approx(1.5).epsilon(1e-12));
  // Materialized table agrees with the evaluator on the full member set.
  OutcomeModel m = to_outcome_model(fam, path, ContextSet::single());
  for (int i = 0; i < 4; ++i)
    for (Bits d = 0; d <= full_mask(4); ++d)
      CHECK(m.mean_outcome(0, i, d) == doctest::Approx(fam.full(path, i, d, c)));
}

TEST_CASE("correct specification test against a brute-force oracle") {
  Network net(3, {{1, 2}, {2, 3}});
  ContextSet ctxs = ContextSet::single();
  ExposureSpec f;
  f.kind = ExposureKind::kAnyTreatedNeighbor;

  // Depends only on (own, any-treated-neighbor): passes.
  OutcomeModel good(3, 1, std::nullopt);
  for (int i = 0; i < 3; ++i)
    for (Bits d = 0; d <= full_mask(3); ++d)
      good.set(0, i, d, 2.0 * has_bit(d, i) + ((d & net.neighbors(i)) != 0));
  CHECK(check_correct_specification(good, f, net, ctxs).holds);

  // Depends on which neighbor is treated: fails with a valid witness.
  OutcomeModel bad(3, 1, std::nullopt);
  for (int i = 0; i < 3; ++i)
    for (Bits d = 0; d <= full_mask(3); ++d) bad.set(0, i, d, static_cast<double>(d));
  CheckVerdict v = check_correct_specification(bad, f, net, ctxs);
  REQUIRE_FALSE(v.holds);
  REQUIRE(v.witness.has_value());
  const CheckWitness& w = *v.witness;
  int i = w.unit;
  CHECK(exposure_value(f, net, i, w.d) == exposure_value(f, net, i, w.d_prime));
  CHECK(bad.mean_outcome(w.ctx, i, w.d) != bad.mean_outcome(w.ctx, i, w.d_prime));
}

TEST_CASE("k-locality check") {
  Network path(4, {{1, 2}, {2, 3}, {3, 4}});
  ContextSet ctxs = ContextSet::single();
  Context c{"c0", 1.0, {}, ""};
  StructuralFamily truncated;
  truncated.eval = [](const Network& net, Bits members, int i, Bits d, const Context&) {
    return 1.0 * has_bit(d, i) + 0.5 * popcount(d & net.neighbors(i) & members);
  };
  OutcomeModel local = to_outcome_model(truncated, path, ctxs);
  CHECK(check_k_locality(local, path, ctxs, 1).holds);

  OutcomeModel global = to_outcome_model(distance_decay_family(0.5), path, ctxs);
  CheckVerdict v = check_k_locality(global, path, ctxs, 1);
  REQUIRE_FALSE(v.holds);
  // Oracle: the witness pair agrees on N(i,1) yet differs in outcome.
  Bits nb = path.neighborhood(v.witness->unit, 1);
  CHECK((v.witness->d & nb) == (v.witness->d_prime & nb));
  CHECK(v.witness->lhs != v.witness->rhs);
  CHECK(check_k_locality(global, path, ctxs, 3).holds);
}

TEST_CASE("interference discrepancy decays with radius") {
  Network path(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}});
  ContextSet ctxs = ContextSet::single();
  StructuralFamily fam = distance_decay_family(0.3);
  double prev = 1e9;
  for (int s = 0; s <= 4; ++s) {
    AniReport r = ani_discrepancy(fam, path, ctxs, s);
    CHECK(r.gamma_hat <= prev + kTol);
    prev = r.gamma_hat;
    CHECK(r.per_unit.size() == 5);
  }
  CHECK(ani_discrepancy(fam, path, ctxs, 4).gamma_hat == doctest::Approx(0.0));
  // Hand oracle at s = 0 for an end unit: dropping everything outside {i}
  // loses at most 0.3 + 0.09 + 0.027 + 0.0081 (all others treated).
  AniReport r0 = ani_discrepancy(fam, path, ctxs, 0);
  CHECK(r0.per_unit[0] == doctest::Approx(0.3 + 0.09 + 0.027 + 0.0081).epsilon(1e-12));

  StructuralFamily declared = distance_decay_family(0.3);
  declared.declared_gamma = std::vector<double>{2.0, 1.0, 0.5, 0.25, 0.2};
  AniReport rd = ani_discrepancy(declared, path, ctxs, 1);
  REQUIRE(rd.within_declared.has_value());
  CHECK(*rd.within_declared);
}
