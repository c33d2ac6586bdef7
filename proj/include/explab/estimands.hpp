#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "explab/mechanisms.hpp"

namespace explab {

struct EstimandSpec {
  ExposureSpec exposure;
  ExposureValue t, t_prime;
  std::optional<Bits> subpop;  // explicit override; else derived from the kind
};

// The subpopulation the estimand averages over. Throws EmptySubpopulation.
Bits resolve_subpop(const EstimandSpec& spec, const Network& net);

struct UnitContextTerm {
  int unit = 0, ctx = 0;
  double mean_t = 0, mean_t_prime = 0, contrast = 0;
};

struct TauResult {
  double value = 0;
  std::vector<double> per_unit;          // context-weighted contrast per subpop unit
  std::vector<UnitContextTerm> terms;    // full diagnostics
};

// tau(t,t'): exact contrast of conditional means, averaged over contexts by
// weight and over the subpopulation uniformly.
TauResult tau(const EstimandSpec& spec, const OutcomeModel& m, const Mechanism& mech,
              const Network& net, const ContextSet& ctxs);

struct TauStarResult {
  double value = 0;
  std::vector<double> per_unit;
};

// tau*(t,t'): the weighted average of unit-level contrasts against the
// pinned-down baseline (delta_i, d_outside). Requires pin-down at t'.
TauStarResult tau_star(const EstimandSpec& spec, const OutcomeModel& m,
                       const Mechanism& mech, const Network& net, const ContextSet& ctxs);

// R_n: the bias term with tau = tau* + R_n.
TauStarResult bias_Rn(const EstimandSpec& spec, const OutcomeModel& m,
                      const Mechanism& mech, const Network& net, const ContextSet& ctxs);

struct AniBiasReport {
  double gap = 0;        // |tau - tau*|
  double gamma_hat = 0;  // discrepancy bound at the exposure's K
  bool within = true;
};

AniBiasReport ani_bias_check(const EstimandSpec& spec, const StructuralFamily& fam,
                             const Mechanism& mech, const Network& net,
                             const ContextSet& ctxs);

enum class Criterion { kGeneral, kPartial, kOrdered };

struct CompEntry {
  int ctx = 0;
  Bits d = 0, d_prime = 0;
  double value = 0;
};

struct ComparisonSet {
  int unit = 0;
  Criterion kind = Criterion::kGeneral;
  std::vector<CompEntry> entries;
};

// Enumerates the qualifying (d, d') contrast pairs for one unit:
//   general - all cross pairs of the two exposure events;
//   partial - pairs sharing the outside-neighborhood subvector;
//   ordered - partial pairs with d_N >= d'_N componentwise.
ComparisonSet comparison_set(Criterion kind, const EstimandSpec& spec,
                             const OutcomeModel& m, const Network& net,
                             const ContextSet& ctxs, int i);

enum class Premise { kAllNonNegative, kAllNonPositive, kMixed, kEmptySets };
enum class Verdict { kPreserved, kViolation, kVacuous };

struct SignVerdict {
  Premise premise = Premise::kEmptySets;
  double tau_value = 0;
  Verdict verdict = Verdict::kVacuous;
  std::optional<CompEntry> min_entry, max_entry;
  int min_unit = -1, max_unit = -1;
};

SignVerdict check_sign_preservation(Criterion kind, const EstimandSpec& spec,
                                    const OutcomeModel& m, const Mechanism& mech,
                                    const Network& net, const ContextSet& ctxs);

const char* criterion_name(Criterion k);
const char* premise_name(Premise p);
const char* verdict_name(Verdict v);

// Randomized counterexample search across outcome tables and mechanisms.
struct SearchConfig {
  enum class Target {
    kDimGeneral,        // difference-in-means under dependent mechanisms
    kFractionMonotone,  // monotone outcomes, tau(3/4, 1/4) < 0
    kPartialBernoulli,  // negative control: partial kind under product laws
  };
  Target target = Target::kDimGeneral;
  int n = 4;
  std::uint64_t seed = 0;
  long budget = 10000;
  std::vector<double> value_grid = {-2, -1, 0, 1, 2, 3};
};

struct FoundReversal {
  long candidate = 0;
  Network net;
  OutcomeModel model;
  Mechanism mech;
  EstimandSpec spec;
  Criterion kind = Criterion::kPartial;
  SignVerdict verdict;
};

// Emits every candidate whose verdict is VIOLATION, each re-verified from a
// fresh evaluation before emission.
std::vector<FoundReversal> search_reversals(const SearchConfig& config);

}  // namespace explab
