#include "explab/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace explab {

namespace {

double binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

void check_law_normalized(const Law& mass, int n, const std::string& where) {
  double total = 0;
  for (const auto& [d, pr] : mass) {
    if (pr < 0) throw ValidationError(where + ": negative probability");
    if (d > full_mask(n)) throw ValidationError(where + ": assignment out of range");
    total += pr;
  }
  if (std::abs(total - 1.0) > kTol)
    throw ValidationError(where + ": probabilities sum to " + std::to_string(total) +
                          ", not 1");
}

}  // namespace

Mechanism Mechanism::explicit_table(int n, std::vector<Law> per_context) {
  std::vector<LawSpec> laws;
  for (auto& mass : per_context) {
    check_law_normalized(mass, n, "explicit mechanism");
    laws.push_back(ExplicitLaw{std::move(mass)});
  }
  return Mechanism(n, Type::kExplicit, std::move(laws));
}

Mechanism Mechanism::product_bernoulli(int n, std::vector<double> p, int num_contexts) {
  if (static_cast<int>(p.size()) == 1) p.assign(n, p[0]);
  if (static_cast<int>(p.size()) != n)
    throw ValidationError("bernoulli mechanism: expected " + std::to_string(n) +
                          " probabilities");
  for (double pi : p)
    if (pi < 0 || pi > 1) throw ValidationError("bernoulli mechanism: p outside [0,1]");
  std::vector<LawSpec> laws(num_contexts, BernoulliLaw{p});
  return Mechanism(n, Type::kBernoulli, std::move(laws));
}

Mechanism Mechanism::complete_randomization(int n, int treated, int num_contexts) {
  if (treated < 0 || treated > n)
    throw ValidationError("complete randomization: treated count out of range");
  std::vector<LawSpec> laws(num_contexts, CompleteLaw{treated});
  return Mechanism(n, Type::kComplete, std::move(laws));
}

Mechanism Mechanism::game_induced(int n, std::vector<std::vector<double>> p_per_context) {
  std::vector<LawSpec> laws;
  for (auto& p : p_per_context) laws.push_back(BernoulliLaw{std::move(p)});
  return Mechanism(n, Type::kGameInduced, std::move(laws));
}

Mechanism Mechanism::per_context(int n, std::vector<LawSpec> laws) {
  for (const LawSpec& ls : laws) {
    if (const auto* ex = std::get_if<ExplicitLaw>(&ls))
      check_law_normalized(ex->mass, n, "explicit mechanism");
    if (const auto* be = std::get_if<BernoulliLaw>(&ls)) {
      if (static_cast<int>(be->p.size()) != n)
        throw ValidationError("bernoulli mechanism: expected " + std::to_string(n) +
                              " probabilities");
      for (double pi : be->p)
        if (pi < 0 || pi > 1) throw ValidationError("bernoulli mechanism: p outside [0,1]");
    }
    if (const auto* co = std::get_if<CompleteLaw>(&ls))
      if (co->treated < 0 || co->treated > n)
        throw ValidationError("complete randomization: treated count out of range");
  }
  return Mechanism(n, Type::kExplicit, std::move(laws));
}

double Mechanism::prob(int ctx, Bits d) const {
  const LawSpec& ls = laws_[ctx];
  if (const auto* ex = std::get_if<ExplicitLaw>(&ls)) {
    auto it = ex->mass.find(d);
    return it == ex->mass.end() ? 0.0 : it->second;
  }
  if (const auto* be = std::get_if<BernoulliLaw>(&ls)) {
    double pr = 1;
    for (int j = 0; j < n_; ++j) pr *= has_bit(d, j) ? be->p[j] : 1 - be->p[j];
    return pr;
  }
  const auto& co = std::get<CompleteLaw>(ls);
  return popcount(d) == co.treated ? 1.0 / binom(n_, co.treated) : 0.0;
}

bool Mechanism::same_law(int ctx, const Mechanism& other, int other_ctx) const {
  if (n_ != other.n_) return false;
  for (Bits d = 0; d <= full_mask(n_); ++d)
    if (std::abs(prob(ctx, d) - other.prob(other_ctx, d)) > kTol) return false;
  return true;
}

Law conditional_law(const Mechanism& mech, const ContextSet& ctxs, int ctx,
                    const ExposureSpec& f, const Network& net, int i,
                    const ExposureValue& t) {
  Law out;
  double total = 0;
  for (Bits d = 0; d <= full_mask(net.n()); ++d) {
    double pr = mech.prob(ctx, d);
    if (pr <= 0) continue;
    if (!(exposure_value(f, net, i, d) == t)) continue;
    out[d] = pr;
    total += pr;
  }
  if (total <= 0) throw OverlapViolation(i + 1, t.str(), ctxs.at(ctx).id);
  for (auto& [d, pr] : out) pr /= total;
  return out;
}

CiVerdict check_ci_selection(const Mechanism& mech, const ContextSet& ctxs, int ctx,
                             const ExposureSpec& f, const Network& net, int i,
                             const ExposureValue& t, const ExposureValue& t_prime) {
  int n = net.n();
  Bits nbhd = f.neighborhood_mask(net, i);
  Bits out_mask = full_mask(n) & ~nbhd;

  // Unconditional law of the outside subvector.
  Law outside;
  for (Bits d = 0; d <= full_mask(n); ++d) {
    double pr = mech.prob(ctx, d);
    if (pr > 0) outside[extract(d, out_mask)] += pr;
  }

  CiVerdict verdict;
  double worst = kTol;
  for (const ExposureValue& s : {t, t_prime}) {
    Law cond = conditional_law(mech, ctxs, ctx, f, net, i, s);
    Law inside;
    for (const auto& [d, pr] : cond) inside[extract(d, nbhd)] += pr;
    for (Bits d = 0; d <= full_mask(n); ++d) {
      auto mass = [](const Law& l, Bits key) {
        auto it = l.find(key);
        return it == l.end() ? 0.0 : it->second;
      };
      double lhs = mass(cond, d);
      double rhs = mass(inside, extract(d, nbhd)) * mass(outside, extract(d, out_mask));
      if (std::abs(lhs - rhs) > worst) {
        worst = std::abs(lhs - rhs);
        verdict.holds = false;
        verdict.witness = CiWitness{s, d, lhs, rhs};
      }
    }
  }
  return verdict;
}

IndependenceVerdict check_unit_independence(const Mechanism& mech, int ctx) {
  int n = mech.n();
  std::vector<double> marg(n, 0.0);
  for (Bits d = 0; d <= full_mask(n); ++d) {
    double pr = mech.prob(ctx, d);
    for (int j = 0; j < n; ++j)
      if (has_bit(d, j)) marg[j] += pr;
  }
  for (Bits d = 0; d <= full_mask(n); ++d) {
    double product = 1;
    for (int j = 0; j < n; ++j) product *= has_bit(d, j) ? marg[j] : 1 - marg[j];
    double joint = mech.prob(ctx, d);
    if (std::abs(joint - product) > kTol) {
      IndependenceWitness w;
      w.d = d;
      w.lhs = joint;
      w.rhs = product;
      // Look for a witnessing pair of units (pairwise dependence).
      for (int a = 0; a < n && w.unit_a < 0; ++a) {
        for (int b = a + 1; b < n && w.unit_a < 0; ++b) {
          double p11 = 0;
          for (Bits e = 0; e <= full_mask(n); ++e)
            if (has_bit(e, a) && has_bit(e, b)) p11 += mech.prob(ctx, e);
          if (std::abs(p11 - marg[a] * marg[b]) > kTol) {
            w.unit_a = a;
            w.unit_b = b;
          }
        }
      }
      return {false, w};
    }
  }
  return {true, std::nullopt};
}

void SelectionGame::validate() const {
  if (n < 1 || n > Network::kMaxUnits) throw ValidationError("game: n out of range");
  for (int c = 0; c < num_contexts(); ++c) {
    for (int i = 0; i < n; ++i) {
      double total = 0;
      for (double pr : type_probs[c][i]) {
        if (pr < 0) throw ValidationError("game: negative type probability");
        total += pr;
      }
      if (std::abs(total - 1.0) > kTol)
        throw ValidationError("game: type probabilities for unit " + std::to_string(i + 1) +
                              " sum to " + std::to_string(total));
      for (const auto& row : util[c][i])
        for (double u : row)
          if (!std::isfinite(u)) throw ValidationError("game: non-finite utility");
    }
  }
}

namespace {

// Expected utility of adopting for (unit, type) when opponents adopt
// independently with probabilities q.
double expected_utility(const SelectionGame& g, int ctx, int unit, int type,
                        const std::vector<double>& q) {
  double eu = 0;
  Bits others_mask = full_mask(g.n) & ~bit(unit);
  // Iterate opponents' patterns via subsets of others_mask.
  Bits sub = 0;
  do {
    double w = 1;
    for (int j = 0; j < g.n; ++j) {
      if (j == unit) continue;
      w *= has_bit(sub, j) ? q[j] : 1 - q[j];
    }
    eu += w * g.utility(ctx, unit, type, sub);
    sub = (sub - others_mask) & others_mask;  // next subset
  } while (sub != 0);
  return eu;
}

std::vector<double> adoption_probs(const SelectionGame& g, int ctx,
                                   const std::vector<std::vector<int>>& profile) {
  std::vector<double> q(g.n, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int v = 0; v < g.num_types(ctx, i); ++v)
      if (profile[i][v]) q[i] += g.type_probs[ctx][i][v];
  return q;
}

std::vector<std::vector<int>> best_response(const SelectionGame& g, int ctx,
                                            const std::vector<std::vector<int>>& profile) {
  std::vector<double> q = adoption_probs(g, ctx, profile);
  std::vector<std::vector<int>> next(g.n);
  for (int i = 0; i < g.n; ++i) {
    next[i].resize(g.num_types(ctx, i));
    for (int v = 0; v < g.num_types(ctx, i); ++v)
      next[i][v] = expected_utility(g, ctx, i, v, q) > 0 ? 1 : 0;  // ties: no adoption
  }
  return next;
}

std::optional<std::vector<std::vector<int>>> iterate_from(
    const SelectionGame& g, int ctx, std::vector<std::vector<int>> profile) {
  std::set<std::vector<std::vector<int>>> visited;
  while (visited.insert(profile).second) {
    auto next = best_response(g, ctx, profile);
    if (next == profile) return profile;
    profile = std::move(next);
  }
  return std::nullopt;  // cycle
}

}  // namespace

GameSolution solve_incomplete_info_game(const SelectionGame& g, int ctx) {
  g.validate();
  std::vector<std::vector<int>> zeros(g.n), ones(g.n);
  for (int i = 0; i < g.n; ++i) {
    zeros[i].assign(g.num_types(ctx, i), 0);
    ones[i].assign(g.num_types(ctx, i), 1);
  }
  auto fixed = iterate_from(g, ctx, zeros);
  if (!fixed)
    throw NoConvergence("best-response iteration cycled in context " + std::to_string(ctx));
  GameSolution sol;
  sol.profile = *fixed;
  sol.adopt_prob = adoption_probs(g, ctx, sol.profile);
  auto other = iterate_from(g, ctx, ones);
  sol.multiple_equilibria = other && *other != sol.profile;
  return sol;
}

Mechanism game_induced_mechanism(const SelectionGame& g) {
  std::vector<std::vector<double>> p;
  for (int c = 0; c < g.num_contexts(); ++c)
    p.push_back(solve_incomplete_info_game(g, c).adopt_prob);
  return Mechanism::game_induced(g.n, std::move(p));
}

namespace {

void check_coupling_pre(const Network& net, int i, int d, int tau_hi, int tau_lo,
                        const std::vector<double>& p) {
  int gamma = net.degree(i);
  if (!(gamma >= tau_hi && tau_hi > tau_lo && tau_lo > 0))
    throw ValidationError("coupling: need degree >= tau > tau' > 0, got degree " +
                          std::to_string(gamma) + ", tau " + std::to_string(tau_hi) +
                          ", tau' " + std::to_string(tau_lo));
  if (d != 0 && d != 1) throw ValidationError("coupling: ego treatment must be 0 or 1");
  if (static_cast<int>(p.size()) != net.n())
    throw ValidationError("coupling: p must have one entry per unit");
  for (double pj : p)
    if (!(pj > 0 && pj < 1)) throw ValidationError("coupling: p must lie in (0,1)");
  // The urn draw of low within high needs the ego's neighbors exchangeable:
  // they must share one treatment probability (outside units may differ).
  std::vector<int> nb = mask_units(net.neighbors(i));
  for (int j : nb)
    if (std::abs(p[j] - p[nb.front()]) > kTol)
      throw ValidationError("coupling: neighbors of the ego must share one p");
}

}  // namespace

CoupledPair sample_coupled_pair(const Network& net, int i, int d, int tau_hi, int tau_lo,
                                const std::vector<double>& p, std::mt19937_64& rng) {
  check_coupling_pre(net, i, d, tau_hi, tau_lo, p);
  Bits ego = d ? bit(i) : 0;
  Bits outside_mask = full_mask(net.n()) & ~net.neighbors(i) & ~bit(i);
  Bits outside = 0;
  for (Bits m = outside_mask; m; m &= m - 1) {
    int j = std::countr_zero(m);
    if (std::bernoulli_distribution(p[j])(rng)) outside |= bit(j);
  }
  // Urn over neighbor labels: tau_lo draws without replacement, then
  // tau_hi - tau_lo further draws.
  std::vector<int> urn = mask_units(net.neighbors(i));
  for (int step = 0; step < tau_hi; ++step) {
    int pick = step + static_cast<int>(std::uniform_int_distribution<std::size_t>(
                          0, urn.size() - 1 - step)(rng));
    std::swap(urn[step], urn[pick]);
  }
  Bits low_nbrs = 0, extra = 0;
  for (int step = 0; step < tau_lo; ++step) low_nbrs |= bit(urn[step]);
  for (int step = tau_lo; step < tau_hi; ++step) extra |= bit(urn[step]);
  CoupledPair pair;
  pair.low = ego | outside | low_nbrs;
  pair.high = pair.low | extra;
  return pair;
}

CoupledPair sample_coupled_pair(const Network& net, int i, int d, int tau_hi, int tau_lo,
                                double p, std::mt19937_64& rng) {
  return sample_coupled_pair(net, i, d, tau_hi, tau_lo,
                             std::vector<double>(net.n(), p), rng);
}

CouplingLaw exact_coupling_law(const Network& net, int i, int d, int tau_hi, int tau_lo,
                               const std::vector<double>& p) {
  check_coupling_pre(net, i, d, tau_hi, tau_lo, p);
  Bits ego = d ? bit(i) : 0;
  Bits outside_mask = full_mask(net.n()) & ~net.neighbors(i) & ~bit(i);
  std::vector<int> nbrs = mask_units(net.neighbors(i));
  int gamma = static_cast<int>(nbrs.size());

  // All k-subsets of the neighbor list as masks.
  auto subsets = [](const std::vector<int>& items, int k) {
    std::vector<Bits> out;
    std::vector<int> idx(k);
    auto rec = [&](auto&& self, int start, int depth, Bits acc) -> void {
      if (depth == k) {
        out.push_back(acc);
        return;
      }
      for (int j = start; j <= static_cast<int>(items.size()) - (k - depth); ++j)
        self(self, j + 1, depth + 1, acc | bit(items[j]));
    };
    rec(rec, 0, 0, 0);
    return out;
  };

  auto low_sets = subsets(nbrs, tau_lo);
  CouplingLaw law;
  for (Bits low_nbrs : low_sets) {
    double w_low = 1.0 / binom(gamma, tau_lo);
    std::vector<int> remaining;
    for (int j : nbrs)
      if (!has_bit(low_nbrs, j)) remaining.push_back(j);
    for (Bits extra : subsets(remaining, tau_hi - tau_lo)) {
      double w_pair = w_low / binom(gamma - tau_lo, tau_hi - tau_lo);
      // Outside Bernoulli patterns.
      Bits sub = 0;
      do {
        double w_out = 1;
        for (Bits m = outside_mask; m; m &= m - 1) {
          int j = std::countr_zero(m);
          w_out *= has_bit(sub, j) ? p[j] : 1 - p[j];
        }
        Bits low = ego | sub | low_nbrs;
        Bits high = low | extra;
        double w = w_pair * w_out;
        law.low[low] += w;
        law.high[high] += w;
        law.joint[{low, high}] += w;
        sub = (sub - outside_mask) & outside_mask;
      } while (sub != 0);
    }
  }
  return law;
}

CouplingLaw exact_coupling_law(const Network& net, int i, int d, int tau_hi, int tau_lo,
                               double p) {
  return exact_coupling_law(net, i, d, tau_hi, tau_lo, std::vector<double>(net.n(), p));
}

double total_variation(const Law& a, const Law& b) {
  double tv = 0;
  auto mass = [](const Law& l, Bits key) {
    auto it = l.find(key);
    return it == l.end() ? 0.0 : it->second;
  };
  for (const auto& [d, pr] : a) tv += std::abs(pr - mass(b, d));
  for (const auto& [d, pr] : b)
    if (!a.count(d)) tv += pr;
  return tv / 2;
}

UnconfoundednessVerdict check_unconfoundedness(const ContextSet& ctxs,
                                               const Mechanism& mech) {
  for (int a = 0; a < ctxs.size(); ++a) {
    for (int b = a + 1; b < ctxs.size(); ++b) {
      if (ctxs.at(a).covariates != ctxs.at(b).covariates) continue;
      if (!mech.same_law(a, mech, b)) return {false, a, b};
    }
  }
  return {true, -1, -1};
}

}  // namespace explab
