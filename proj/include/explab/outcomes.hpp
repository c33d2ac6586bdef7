#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "explab/network.hpp"

namespace explab {

inline constexpr double kTol = 1e-12;  // tolerance for all exact identities

// One realization of the conditioning variables: covariates X plus an
// epsilon-state label for outcome noise folded into the context. The network
// is shared across contexts.
struct Context {
  std::string id;
  double weight = 1.0;
  std::vector<int> covariates;  // empty = no covariates
  std::string eps;              // epsilon-state label, "" if none
};

// Weighted context set; weights must be nonnegative and sum to 1.
class ContextSet {
 public:
  explicit ContextSet(std::vector<Context> contexts);
  static ContextSet single();  // one context "c0" with weight 1

  int size() const { return static_cast<int>(contexts_.size()); }
  const Context& at(int c) const { return contexts_[c]; }
  int index_of(const std::string& id) const;  // -1 if absent

 private:
  std::vector<Context> contexts_;
};

// Table of conditional-mean outcomes E[Y_i(d) | c]. Missing cells fall back
// to the default value; without a default they are hard errors.
class OutcomeModel {
 public:
  OutcomeModel(int n, int num_contexts, std::optional<double> default_value)
      : n_(n), default_(default_value), cells_(num_contexts) {}

  void set(int ctx, int unit, Bits d, double value);
  double mean_outcome(int ctx, int unit, Bits d) const;
  int n() const { return n_; }
  int num_contexts() const { return static_cast<int>(cells_.size()); }

 private:
  int n_;
  std::optional<double> default_;
  std::vector<std::unordered_map<std::uint64_t, double>> cells_;
};

// Structural outcome family g: evaluator gives the s-neighborhood submodel
// outcome g_{|S|}(i, d_S, X_S, A_S) for any member set S containing i; with
// S = {1..n} it reproduces the full model.
struct StructuralFamily {
  std::function<double(const Network& net, Bits members, int i, Bits d, const Context& c)>
      eval;
  std::optional<std::vector<double>> declared_gamma;  // gamma_n(s) by radius s

  double full(const Network& net, int i, Bits d, const Context& c) const {
    return eval(net, full_mask(net.n()), i, d, c);
  }
};

// Distance-decay toy: g(i,d) = d_i + sum_{j != i} rate^dist(i,j) d_j over
// units in the member set, distances taken within the full network.
StructuralFamily distance_decay_family(double rate);

// Materializes a structural family as an outcome table.
OutcomeModel to_outcome_model(const StructuralFamily& fam, const Network& net,
                              const ContextSet& ctxs);

struct CheckWitness {
  int ctx = -1;
  int unit = -1;  // internal index
  Bits d = 0, d_prime = 0;
  double lhs = 0, rhs = 0;
};

struct CheckVerdict {
  bool holds = true;
  std::optional<CheckWitness> witness;
};

struct ExposureSpec;  // exposures.hpp

// Correct specification: f(d_N) = f(d'_N) implies equal outcomes, for every
// context and unit.
CheckVerdict check_correct_specification(const OutcomeModel& m, const ExposureSpec& f,
                                         const Network& net, const ContextSet& ctxs);

// K'-locality: outcomes agree whenever d, d' agree on N(i,K').
CheckVerdict check_k_locality(const OutcomeModel& m, const Network& net,
                              const ContextSet& ctxs, int k_prime);

struct AniReport {
  std::vector<double> per_unit;  // max discrepancy by unit
  double gamma_hat = 0;
  std::optional<bool> within_declared;  // gamma_hat(s) <= declared gamma(s)?
};

// Max over contexts, units and assignments of |g_n - g_{N(i,s)}|.
AniReport ani_discrepancy(const StructuralFamily& fam, const Network& net,
                          const ContextSet& ctxs, int s);

}  // namespace explab
