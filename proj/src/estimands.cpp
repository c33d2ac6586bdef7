#include "explab/estimands.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace explab {

Bits resolve_subpop(const EstimandSpec& spec, const Network& net) {
  Bits pop = spec.subpop ? *spec.subpop : subpopulation(spec.exposure, net);
  if (pop == 0) throw EmptySubpopulation();
  return pop;
}

TauResult tau(const EstimandSpec& spec, const OutcomeModel& m, const Mechanism& mech,
              const Network& net, const ContextSet& ctxs) {
  Bits pop = resolve_subpop(spec, net);
  TauResult res;
  for (int i : mask_units(pop)) {
    double unit_term = 0;
    for (int c = 0; c < ctxs.size(); ++c) {
      if (ctxs.at(c).weight == 0) continue;
      double mean_t = 0, mean_tp = 0;
      for (const auto& [d, pr] :
           conditional_law(mech, ctxs, c, spec.exposure, net, i, spec.t))
        mean_t += pr * m.mean_outcome(c, i, d);
      for (const auto& [d, pr] :
           conditional_law(mech, ctxs, c, spec.exposure, net, i, spec.t_prime))
        mean_tp += pr * m.mean_outcome(c, i, d);
      double contrast = mean_t - mean_tp;
      unit_term += ctxs.at(c).weight * contrast;
      res.terms.push_back(UnitContextTerm{i, c, mean_t, mean_tp, contrast});
    }
    res.per_unit.push_back(unit_term);
    res.value += unit_term;
  }
  res.value /= static_cast<double>(res.per_unit.size());
  return res;
}

namespace {

// delta_i deposited on N(i,K), with pin-down verified at t'.
Bits pinned_delta(const EstimandSpec& spec, const Network& net, int i) {
  auto pin = check_pindown(spec.exposure, net, i, spec.t_prime);
  if (pin.status == PindownResult::Status::kFails)
    throw PindownViolation(i + 1, "two subvectors attain t' = " + spec.t_prime.str());
  if (pin.status == PindownResult::Status::kEmpty)
    throw PindownViolation(i + 1, "no subvector attains t' = " + spec.t_prime.str());
  return deposit(pin.delta, spec.exposure.neighborhood_mask(net, i));
}

}  // namespace

TauStarResult tau_star(const EstimandSpec& spec, const OutcomeModel& m,
                       const Mechanism& mech, const Network& net,
                       const ContextSet& ctxs) {
  Bits pop = resolve_subpop(spec, net);
  TauStarResult res;
  for (int i : mask_units(pop)) {
    Bits nbhd = spec.exposure.neighborhood_mask(net, i);
    Bits delta = pinned_delta(spec, net, i);
    double unit_term = 0;
    for (int c = 0; c < ctxs.size(); ++c) {
      if (ctxs.at(c).weight == 0) continue;
      double acc = 0;
      for (const auto& [d, pr] :
           conditional_law(mech, ctxs, c, spec.exposure, net, i, spec.t)) {
        Bits baseline = delta | (d & ~nbhd);
        acc += pr * (m.mean_outcome(c, i, d) - m.mean_outcome(c, i, baseline));
      }
      unit_term += ctxs.at(c).weight * acc;
    }
    res.per_unit.push_back(unit_term);
    res.value += unit_term;
  }
  res.value /= static_cast<double>(res.per_unit.size());
  return res;
}

TauStarResult bias_Rn(const EstimandSpec& spec, const OutcomeModel& m,
                      const Mechanism& mech, const Network& net, const ContextSet& ctxs) {
  Bits pop = resolve_subpop(spec, net);
  TauStarResult res;
  for (int i : mask_units(pop)) {
    Bits nbhd = spec.exposure.neighborhood_mask(net, i);
    Bits delta = pinned_delta(spec, net, i);
    double unit_term = 0;
    for (int c = 0; c < ctxs.size(); ++c) {
      if (ctxs.at(c).weight == 0) continue;
      Law at_t = conditional_law(mech, ctxs, c, spec.exposure, net, i, spec.t);
      Law at_tp = conditional_law(mech, ctxs, c, spec.exposure, net, i, spec.t_prime);
      Law diff = at_t;
      for (const auto& [d, pr] : at_tp) diff[d] -= pr;
      double acc = 0;
      for (const auto& [d, w] : diff)
        acc += w * m.mean_outcome(c, i, delta | (d & ~nbhd));
      unit_term += ctxs.at(c).weight * acc;
    }
    res.per_unit.push_back(unit_term);
    res.value += unit_term;
  }
  res.value /= static_cast<double>(res.per_unit.size());
  return res;
}

AniBiasReport ani_bias_check(const EstimandSpec& spec, const StructuralFamily& fam,
                             const Mechanism& mech, const Network& net,
                             const ContextSet& ctxs) {
  OutcomeModel model = to_outcome_model(fam, net, ctxs);
  AniBiasReport rep;
  rep.gap = std::abs(tau(spec, model, mech, net, ctxs).value -
                     tau_star(spec, model, mech, net, ctxs).value);
  int k = spec.exposure.kind == ExposureKind::kFractionTreated ? net.diameter()
                                                               : spec.exposure.radius();
  rep.gamma_hat = ani_discrepancy(fam, net, ctxs, k).gamma_hat;
  rep.within = rep.gap <= rep.gamma_hat + kTol;
  return rep;
}

ComparisonSet comparison_set(Criterion kind, const EstimandSpec& spec,
                             const OutcomeModel& m, const Network& net,
                             const ContextSet& ctxs, int i) {
  int n = net.n();
  const ExposureSpec& f = spec.exposure;
  ComparisonSet set;
  set.unit = i;
  set.kind = kind;
  if (kind == Criterion::kGeneral) {
    std::vector<Bits> at_t, at_tp;
    for (Bits d = 0; d <= full_mask(n); ++d) {
      ExposureValue v = exposure_value(f, net, i, d);
      if (v == spec.t) at_t.push_back(d);
      if (v == spec.t_prime) at_tp.push_back(d);
    }
    for (Bits d : at_t)
      for (Bits dp : at_tp)
        for (int c = 0; c < ctxs.size(); ++c)
          set.entries.push_back(
              CompEntry{c, d, dp, m.mean_outcome(c, i, d) - m.mean_outcome(c, i, dp)});
    return set;
  }
  // Partial / ordered: iterate outside-subvectors once and pair neighborhood
  // patterns within.
  Bits nbhd = f.neighborhood_mask(net, i);
  int in_size = popcount(nbhd);
  std::vector<Bits> e_t, e_tp;  // neighborhood patterns (deposited on nbhd)
  for (Bits sub = 0; sub < (Bits{1} << in_size); ++sub) {
    Bits inside = deposit(sub, nbhd);
    ExposureValue v = exposure_value(f, net, i, inside);
    if (v == spec.t) e_t.push_back(inside);
    if (v == spec.t_prime) e_tp.push_back(inside);
  }
  Bits out_mask = full_mask(n) & ~nbhd;
  int out_size = popcount(out_mask);
  for (Bits osub = 0; osub < (Bits{1} << out_size); ++osub) {
    Bits outside = deposit(osub, out_mask);
    for (Bits e : e_t) {
      for (Bits ep : e_tp) {
        if (kind == Criterion::kOrdered && (ep & ~e)) continue;  // need e >= ep
        Bits d = e | outside, dp = ep | outside;
        for (int c = 0; c < ctxs.size(); ++c)
          set.entries.push_back(
              CompEntry{c, d, dp, m.mean_outcome(c, i, d) - m.mean_outcome(c, i, dp)});
      }
    }
  }
  return set;
}

SignVerdict check_sign_preservation(Criterion kind, const EstimandSpec& spec,
                                    const OutcomeModel& m, const Mechanism& mech,
                                    const Network& net, const ContextSet& ctxs) {
  Bits pop = resolve_subpop(spec, net);
  SignVerdict sv;
  sv.tau_value = tau(spec, m, mech, net, ctxs).value;
  bool any = false;
  double min_v = 0, max_v = 0;
  for (int i : mask_units(pop)) {
    ComparisonSet set = comparison_set(kind, spec, m, net, ctxs, i);
    for (const CompEntry& e : set.entries) {
      if (!any || e.value < min_v) {
        min_v = e.value;
        sv.min_entry = e;
        sv.min_unit = i;
      }
      if (!any || e.value > max_v) {
        max_v = e.value;
        sv.max_entry = e;
        sv.max_unit = i;
      }
      any = true;
    }
  }
  if (!any) {
    sv.premise = Premise::kEmptySets;
    sv.verdict = Verdict::kVacuous;
    return sv;
  }
  if (min_v >= -kTol)
    sv.premise = Premise::kAllNonNegative;
  else if (max_v <= kTol)
    sv.premise = Premise::kAllNonPositive;
  else
    sv.premise = Premise::kMixed;
  if (sv.premise == Premise::kMixed) {
    sv.verdict = Verdict::kVacuous;
    return sv;
  }
  bool contradicted = (min_v >= -kTol && sv.tau_value < -kTol) ||
                      (max_v <= kTol && sv.tau_value > kTol);
  sv.verdict = contradicted ? Verdict::kViolation : Verdict::kPreserved;
  return sv;
}

const char* criterion_name(Criterion k) {
  switch (k) {
    case Criterion::kGeneral:
      return "general";
    case Criterion::kPartial:
      return "partial";
    case Criterion::kOrdered:
      return "ordered";
  }
  return "?";
}

const char* premise_name(Premise p) {
  switch (p) {
    case Premise::kAllNonNegative:
      return "all_nonnegative";
    case Premise::kAllNonPositive:
      return "all_nonpositive";
    case Premise::kMixed:
      return "mixed";
    case Premise::kEmptySets:
      return "empty_sets";
  }
  return "?";
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kPreserved:
      return "PRESERVED";
    case Verdict::kViolation:
      return "VIOLATION";
    case Verdict::kVacuous:
      return "VACUOUS";
  }
  return "?";
}

namespace {

struct Candidate {
  Network net;
  OutcomeModel model;
  Mechanism mech;
  EstimandSpec spec;
  Criterion kind;
};

// Random explicit law over {0,1}^n: a handful of support points with
// normalized random masses.
Law random_explicit_law(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<Bits> pick(0, full_mask(n));
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  int support = std::uniform_int_distribution<int>(2, 1 << n)(rng);
  Law law;
  for (int s = 0; s < support; ++s) law[pick(rng)] += mass(rng);
  double total = 0;
  for (auto& [d, pr] : law) total += pr;
  for (auto& [d, pr] : law) pr /= total;
  return law;
}

Candidate make_candidate(const SearchConfig& cfg, std::mt19937_64& rng) {
  using Target = SearchConfig::Target;
  int n = cfg.n;
  std::uniform_int_distribution<std::size_t> pick_value(0, cfg.value_grid.size() - 1);
  switch (cfg.target) {
    case Target::kDimGeneral: {
      // Paired units (dyad-style), DIM exposure, dependent explicit mechanism.
      Network net(2, {{1, 2}});
      OutcomeModel model(2, 1, std::nullopt);
      for (int i = 0; i < 2; ++i)
        for (Bits d = 0; d < 4; ++d) model.set(0, i, d, cfg.value_grid[pick_value(rng)]);
      Mechanism mech = Mechanism::explicit_table(2, {random_explicit_law(2, rng)});
      EstimandSpec spec;
      spec.exposure.kind = ExposureKind::kDim;
      spec.t = ExposureValue::bit_value(1);
      spec.t_prime = ExposureValue::bit_value(0);
      return Candidate{net, model, mech, spec, Criterion::kPartial};
    }
    case Target::kFractionMonotone: {
      // Monotone outcomes Y_i(d) = sum_j w_ij d_j with w >= 0, heavy-tailed so
      // a single unit can dominate; dependent two-point mechanism pairing a
      // 3/4-treated pattern with the complementary 1/4-treated pattern.
      Network net(n, {});
      OutcomeModel model(n, 1, std::nullopt);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::uniform_real_distribution<double> heavy(5.0, 50.0);
      for (int i = 0; i < n; ++i) {
        std::vector<double> w(n);
        for (auto& x : w) x = unif(rng) < 0.25 ? heavy(rng) : unif(rng);
        for (Bits d = 0; d <= full_mask(n); ++d) {
          double y = 0;
          for (int j = 0; j < n; ++j)
            if (has_bit(d, j)) y += w[j];
          model.set(0, i, d, y);
        }
      }
      int lone = std::uniform_int_distribution<int>(0, n - 1)(rng);
      Bits hi_pattern = full_mask(n) & ~bit(lone);
      Law law;
      double a = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
      law[hi_pattern] = a;
      law[bit(lone)] = 1 - a;
      Mechanism mech = Mechanism::explicit_table(n, {law});
      EstimandSpec spec;
      spec.exposure.kind = ExposureKind::kFractionTreated;
      spec.t = ExposureValue::fraction(3, 4);
      spec.t_prime = ExposureValue::fraction(1, 4);
      return Candidate{net, model, mech, spec, Criterion::kOrdered};
    }
    case Target::kPartialBernoulli: {
      // Random graph, neighbor-count exposure with t' = (d, 0), product law.
      std::vector<std::pair<int, int>> edges;
      std::bernoulli_distribution edge_coin(0.5);
      for (int a = 1; a <= n; ++a)
        for (int b = a + 1; b <= n; ++b)
          if (edge_coin(rng)) edges.emplace_back(a, b);
      Network net(n, edges);
      OutcomeModel model(n, 1, std::nullopt);
      for (int i = 0; i < n; ++i)
        for (Bits d = 0; d <= full_mask(n); ++d)
          model.set(0, i, d, cfg.value_grid[pick_value(rng)]);
      std::vector<double> p(n);
      std::uniform_real_distribution<double> prob(0.1, 0.9);
      for (auto& x : p) x = prob(rng);
      Mechanism mech = Mechanism::product_bernoulli(n, p);
      // Target some unit with at least one neighbor.
      std::vector<int> eligible;
      for (int i = 0; i < n; ++i)
        if (net.degree(i) >= 1) eligible.push_back(i);
      EstimandSpec spec;
      spec.exposure.kind = ExposureKind::kNeighborCount;
      int own = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
      if (eligible.empty()) {
        spec.exposure.gamma = 0;  // empty subpopulation; candidate is skipped
        spec.t = ExposureValue::pair_value(own, 1);
      } else {
        int i = eligible[std::uniform_int_distribution<std::size_t>(
            0, eligible.size() - 1)(rng)];
        int gamma = net.degree(i);
        spec.exposure.gamma = gamma;
        spec.t = ExposureValue::pair_value(
            own, std::uniform_int_distribution<int>(1, gamma)(rng));
      }
      spec.exposure.own = own;
      spec.t_prime = ExposureValue::pair_value(own, 0);
      return Candidate{net, model, mech, spec, Criterion::kPartial};
    }
  }
  throw ValidationError("unknown search target");
}

}  // namespace

std::vector<FoundReversal> search_reversals(const SearchConfig& cfg) {
  std::vector<FoundReversal> found;
  ContextSet ctxs = ContextSet::single();
  for (long idx = 0; idx < cfg.budget; ++idx) {
    // Independent stream per candidate index: results merge deterministically.
    std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (idx + 1)));
    Candidate cand = make_candidate(cfg, rng);
    SignVerdict sv;
    try {
      sv = check_sign_preservation(cand.kind, cand.spec, cand.model, cand.mech, cand.net,
                                   ctxs);
    } catch (const OverlapViolation&) {
      continue;
    } catch (const EmptySubpopulation&) {
      continue;
    }
    if (sv.verdict != Verdict::kViolation) continue;
    // Re-verify from a fresh evaluation before emission.
    SignVerdict check = check_sign_preservation(cand.kind, cand.spec, cand.model,
                                                cand.mech, cand.net, ctxs);
    if (check.verdict != Verdict::kViolation) continue;
    found.push_back(FoundReversal{idx, cand.net, cand.model, cand.mech, cand.spec,
                                  cand.kind, check});
  }
  return found;
}

}  // namespace explab
