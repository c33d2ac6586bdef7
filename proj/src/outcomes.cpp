#include "explab/outcomes.hpp"

#include <algorithm>

#include "explab/errors.hpp"
#include "explab/exposures.hpp"

namespace explab {

ContextSet::ContextSet(std::vector<Context> contexts) : contexts_(std::move(contexts)) {
  if (contexts_.empty()) throw ValidationError("context set is empty");
  double total = 0;
  for (const auto& c : contexts_) {
    if (c.weight < 0) throw ValidationError("context '" + c.id + "' has negative weight");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > kTol)
    throw ValidationError("context weights sum to " + std::to_string(total) + ", not 1");
}

ContextSet ContextSet::single() { return ContextSet({Context{"c0", 1.0, {}, ""}}); }

int ContextSet::index_of(const std::string& id) const {
  for (int c = 0; c < size(); ++c)
    if (contexts_[c].id == id) return c;
  return -1;
}

namespace {
std::uint64_t cell_key(int unit, Bits d) {
  return (static_cast<std::uint64_t>(unit) << 32) | d;
}
}  // namespace

void OutcomeModel::set(int ctx, int unit, Bits d, double value) {
  if (!std::isfinite(value))
    throw ValidationError("outcome value for unit " + std::to_string(unit + 1) +
                          " is not finite");
  cells_[ctx][cell_key(unit, d)] = value;
}

double OutcomeModel::mean_outcome(int ctx, int unit, Bits d) const {
  auto it = cells_[ctx].find(cell_key(unit, d));
  if (it != cells_[ctx].end()) return it->second;
  if (default_) return *default_;
  throw MissingCell("no outcome for context " + std::to_string(ctx) + ", unit " +
                    std::to_string(unit + 1) + " and no default configured");
}

StructuralFamily distance_decay_family(double rate) {
  StructuralFamily fam;
  fam.eval = [rate](const Network& net, Bits members, int i, Bits d, const Context&) {
    double y = has_bit(d, i) ? 1.0 : 0.0;
    for (Bits m = members; m; m &= m - 1) {
      int j = std::countr_zero(m);
      if (j == i || !has_bit(d, j)) continue;
      int dist = net.distance(i, j);
      if (dist > 0) y += std::pow(rate, dist);
    }
    return y;
  };
  return fam;
}

OutcomeModel to_outcome_model(const StructuralFamily& fam, const Network& net,
                              const ContextSet& ctxs) {
  OutcomeModel m(net.n(), ctxs.size(), std::nullopt);
  for (int c = 0; c < ctxs.size(); ++c)
    for (int i = 0; i < net.n(); ++i)
      for (Bits d = 0; d <= full_mask(net.n()); ++d)
        m.set(c, i, d, fam.full(net, i, d, ctxs.at(c)));
  return m;
}

CheckVerdict check_correct_specification(const OutcomeModel& m, const ExposureSpec& f,
                                         const Network& net, const ContextSet& ctxs) {
  int n = m.n();
  for (int c = 0; c < ctxs.size(); ++c) {
    for (int i = 0; i < n; ++i) {
      // Bucket assignments by exposure value; outcomes within a bucket must agree.
      std::vector<std::pair<ExposureValue, Bits>> rep;  // first d per value
      for (Bits d = 0; d <= full_mask(n); ++d) {
        ExposureValue v = exposure_value(f, net, i, d);
        auto it = std::find_if(rep.begin(), rep.end(),
                               [&](const auto& p) { return p.first == v; });
        if (it == rep.end()) {
          rep.emplace_back(v, d);
          continue;
        }
        double lhs = m.mean_outcome(c, i, it->second);
        double rhs = m.mean_outcome(c, i, d);
        if (std::abs(lhs - rhs) > kTol)
          return {false, CheckWitness{c, i, it->second, d, lhs, rhs}};
      }
    }
  }
  return {true, std::nullopt};
}

CheckVerdict check_k_locality(const OutcomeModel& m, const Network& net,
                              const ContextSet& ctxs, int k_prime) {
  int n = m.n();
  for (int c = 0; c < ctxs.size(); ++c) {
    for (int i = 0; i < n; ++i) {
      Bits mask = net.neighborhood(i, k_prime);
      std::unordered_map<Bits, Bits> rep;  // inside pattern -> first d
      for (Bits d = 0; d <= full_mask(n); ++d) {
        Bits inside = d & mask;
        auto [it, fresh] = rep.try_emplace(inside, d);
        if (fresh) continue;
        double lhs = m.mean_outcome(c, i, it->second);
        double rhs = m.mean_outcome(c, i, d);
        if (std::abs(lhs - rhs) > kTol)
          return {false, CheckWitness{c, i, it->second, d, lhs, rhs}};
      }
    }
  }
  return {true, std::nullopt};
}

AniReport ani_discrepancy(const StructuralFamily& fam, const Network& net,
                          const ContextSet& ctxs, int s) {
  int n = net.n();
  AniReport rep;
  rep.per_unit.assign(n, 0.0);
  for (int c = 0; c < ctxs.size(); ++c) {
    for (int i = 0; i < n; ++i) {
      Bits members = net.neighborhood(i, s);
      for (Bits d = 0; d <= full_mask(n); ++d) {
        double gap = std::abs(fam.full(net, i, d, ctxs.at(c)) -
                              fam.eval(net, members, i, d, ctxs.at(c)));
        rep.per_unit[i] = std::max(rep.per_unit[i], gap);
      }
    }
  }
  rep.gamma_hat = *std::max_element(rep.per_unit.begin(), rep.per_unit.end());
  if (fam.declared_gamma) {
    const auto& g = *fam.declared_gamma;
    double declared = s < static_cast<int>(g.size()) ? g[s] : g.empty() ? 0.0 : g.back();
    rep.within_declared = rep.gamma_hat <= declared + kTol;
  }
  return rep;
}

}  // namespace explab
