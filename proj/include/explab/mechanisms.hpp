#pragma once

#include <map>
#include <random>
#include <variant>
#include <vector>

#include "explab/exposures.hpp"
#include "explab/network.hpp"
#include "explab/outcomes.hpp"

namespace explab {

// Probability distribution over {0,1}^n, sparse, keyed by assignment bits.
using Law = std::map<Bits, double>;

struct ExplicitLaw {
  Law mass;
};
struct BernoulliLaw {
  std::vector<double> p;  // independent per-unit treatment probabilities
};
struct CompleteLaw {
  int treated;  // uniform over assignments with exactly this many treated
};
using LawSpec = std::variant<ExplicitLaw, BernoulliLaw, CompleteLaw>;

// Assignment mechanism: one law per context. Immutable after construction.
class Mechanism {
 public:
  enum class Type { kExplicit, kBernoulli, kComplete, kGameInduced };

  static Mechanism explicit_table(int n, std::vector<Law> per_context);
  static Mechanism product_bernoulli(int n, std::vector<double> p, int num_contexts = 1);
  static Mechanism complete_randomization(int n, int treated, int num_contexts = 1);
  static Mechanism game_induced(int n, std::vector<std::vector<double>> p_per_context);
  // Heterogeneous laws by context (e.g. covariate-dependent assignment).
  static Mechanism per_context(int n, std::vector<LawSpec> laws);

  int n() const { return n_; }
  int num_contexts() const { return static_cast<int>(laws_.size()); }
  Type type() const { return type_; }
  const LawSpec& law(int ctx) const { return laws_[ctx]; }

  double prob(int ctx, Bits d) const;

  // Exact law equality (every assignment, within kTol).
  bool same_law(int ctx, const Mechanism& other, int other_ctx) const;

 private:
  Mechanism(int n, Type t, std::vector<LawSpec> laws)
      : n_(n), type_(t), laws_(std::move(laws)) {}
  int n_;
  Type type_;
  std::vector<LawSpec> laws_;
};

// P(D = d | T_i = t, c): Bayes restriction of the context law to the event.
// Throws OverlapViolation when the event has zero mass.
Law conditional_law(const Mechanism& mech, const ContextSet& ctxs, int ctx,
                    const ExposureSpec& f, const Network& net, int i,
                    const ExposureValue& t);

struct CiWitness {
  ExposureValue s;
  Bits d = 0;
  double lhs = 0, rhs = 0;
};
struct CiVerdict {
  bool holds = true;
  std::optional<CiWitness> witness;  // worst violation
};

// CI selection: P(D=d | T_i=s, c) factors into the neighborhood conditional
// times the unconditional outside law, for s in {t, t'}.
CiVerdict check_ci_selection(const Mechanism& mech, const ContextSet& ctxs, int ctx,
                             const ExposureSpec& f, const Network& net, int i,
                             const ExposureValue& t, const ExposureValue& t_prime);

struct IndependenceWitness {
  int unit_a = -1, unit_b = -1;  // pairwise-dependent units, if any
  Bits d = 0;                    // assignment where joint != product
  double lhs = 0, rhs = 0;
};
struct IndependenceVerdict {
  bool holds = true;
  std::optional<IndependenceWitness> witness;
};

// Does the joint law equal the product of its unit marginals, exactly?
IndependenceVerdict check_unit_independence(const Mechanism& mech, int ctx);

// Incomplete-information adoption game: finite private types per unit,
// independent across units given the context; utility tables indexed by the
// opponents' assignment (own bit is ignored).
struct SelectionGame {
  int n = 0;
  // [context][unit][type]
  std::vector<std::vector<std::vector<double>>> type_probs;
  // [context][unit][type][assignment bits], own bit masked out on lookup
  std::vector<std::vector<std::vector<std::vector<double>>>> util;

  int num_contexts() const { return static_cast<int>(type_probs.size()); }
  int num_types(int ctx, int unit) const {
    return static_cast<int>(type_probs[ctx][unit].size());
  }
  double utility(int ctx, int unit, int type, Bits others) const {
    return util[ctx][unit][type][others & ~bit(unit)];
  }
  void validate() const;
};

struct GameSolution {
  std::vector<std::vector<int>> profile;  // profile[unit][type] in {0,1}
  std::vector<double> adopt_prob;         // induced per-unit adoption probability
  bool multiple_equilibria = false;       // a second fixed point exists
};

// Pure-strategy Bayes-Nash fixed point by synchronous best response from the
// all-zero profile (ties resolve to no adoption). Throws NoConvergence on a
// cycle. The all-ones start is also run to flag multiplicity.
GameSolution solve_incomplete_info_game(const SelectionGame& g, int ctx);

// Pushforward of the type law through the equilibrium profile: a product law
// across units, one per context.
Mechanism game_induced_mechanism(const SelectionGame& g);

// Urn coupling of two neighborhood-count events. Both vectors give the ego
// treatment d; high has
// tau_hi treated neighbors, low has tau_lo, high >= low componentwise.
struct CoupledPair {
  Bits low = 0, high = 0;
};

CoupledPair sample_coupled_pair(const Network& net, int i, int d, int tau_hi, int tau_lo,
                                const std::vector<double>& p, std::mt19937_64& rng);
CoupledPair sample_coupled_pair(const Network& net, int i, int d, int tau_hi, int tau_lo,
                                double p, std::mt19937_64& rng);

struct CouplingLaw {
  Law low, high;
  std::map<std::pair<Bits, Bits>, double> joint;
};

// Exact joint law of (low, high) by enumerating every urn draw and Bernoulli
// pattern on the outside units.
CouplingLaw exact_coupling_law(const Network& net, int i, int d, int tau_hi, int tau_lo,
                               const std::vector<double>& p);
CouplingLaw exact_coupling_law(const Network& net, int i, int d, int tau_hi, int tau_lo,
                               double p);

double total_variation(const Law& a, const Law& b);

struct UnconfoundednessVerdict {
  bool holds = true;
  int ctx_a = -1, ctx_b = -1;  // witnessing context pair
};

// Contexts differing only in their epsilon-state must carry identical
// mechanisms; otherwise the epsilon-state confounds assignment.
UnconfoundednessVerdict check_unconfoundedness(const ContextSet& ctxs,
                                               const Mechanism& mech);

}  // namespace explab
