#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "explab/scenario.hpp"

namespace explab {

namespace {

const char* kDyadDim = R"json({
  "n": 2,
  "edges": [[1, 2]],
  "outcomes": {
    "default": 0,
    "entries": [
      {"unit": 1, "assignment": "10", "value": 1},
      {"unit": 1, "assignment": "01", "value": 2},
      {"unit": 1, "assignment": "11", "value": 3},
      {"unit": 2, "assignment": "01", "value": 1},
      {"unit": 2, "assignment": "10", "value": 2},
      {"unit": 2, "assignment": "11", "value": 3}
    ]
  },
  "mechanism": {"type": "complete", "treated": 1},
  "estimand": {"exposure": {"kind": "dim"}, "t": "1", "t_prime": "0"}
})json";

const char* kTriadSpillover = R"json({
  "n": 3,
  "edges": [[1, 2], [2, 3]],
  "outcomes": {
    "default": 0,
    "entries": [
      {"unit": 1, "assignment": "110", "value": 1},
      {"unit": 1, "assignment": "101", "value": 2},
      {"unit": 1, "assignment": "111", "value": 3},
      {"unit": 3, "assignment": "011", "value": 1},
      {"unit": 3, "assignment": "101", "value": 2},
      {"unit": 3, "assignment": "111", "value": 3}
    ]
  },
  "mechanism": {"type": "explicit", "rows": [
    {"assignment": "110", "prob": 0.3333333333333333},
    {"assignment": "101", "prob": 0.3333333333333333},
    {"assignment": "011", "prob": 0.3333333333333334}
  ]},
  "estimand": {
    "exposure": {"kind": "neighbor_count", "own": 1, "gamma": 1},
    "t": "(1,1)", "t_prime": "(1,0)"
  }
})json";

const char* kQuadOrdered = R"json({
  "n": 4,
  "edges": [[1,2],[1,3],[1,4],[2,3],[2,4],[3,4]],
  "outcomes": {
    "default": 0,
    "entries": [
      {"unit": 1, "assignment": "1110", "value": 1},
      {"unit": 1, "assignment": "1101", "value": 2},
      {"unit": 1, "assignment": "1011", "value": 3},
      {"unit": 1, "assignment": "1100", "value": 0},
      {"unit": 1, "assignment": "1010", "value": 1},
      {"unit": 1, "assignment": "1001", "value": 2}
    ]
  },
  "mechanism": {"type": "explicit", "rows": [
    {"assignment": "1110", "prob": 0.5},
    {"assignment": "1001", "prob": 0.5}
  ]},
  "estimand": {
    "exposure": {"kind": "neighbor_count", "own": 1, "gamma": 3},
    "t": "(1,2)", "t_prime": "(1,1)", "subpop": [1]
  }
})json";

const char* kGameProp1 = R"json({
  "n": 2,
  "edges": [[1, 2]],
  "outcomes": {
    "default": 0,
    "entries": [
      {"unit": 1, "assignment": "10", "value": 1},
      {"unit": 1, "assignment": "11", "value": 2},
      {"unit": 2, "assignment": "01", "value": 1},
      {"unit": 2, "assignment": "11", "value": 2}
    ]
  },
  "mechanism": {"type": "game",
    "types": [
      {"unit": 1, "probs": [0.5, 0.5]},
      {"unit": 2, "probs": [0.5, 0.5]}
    ],
    "utilities": [
      {"unit": 1, "type": 0, "assignment": "00", "value": -0.6},
      {"unit": 1, "type": 0, "assignment": "01", "value": 0.4},
      {"unit": 1, "type": 1, "assignment": "00", "value": 0.1},
      {"unit": 1, "type": 1, "assignment": "01", "value": 1.1},
      {"unit": 2, "type": 0, "assignment": "00", "value": -0.6},
      {"unit": 2, "type": 0, "assignment": "10", "value": 0.4},
      {"unit": 2, "type": 1, "assignment": "00", "value": 0.1},
      {"unit": 2, "type": 1, "assignment": "10", "value": 1.1}
    ]
  },
  "estimand": {"exposure": {"kind": "dim"}, "t": "1", "t_prime": "0"}
})json";

// Tracks pass/fail lines; prints a diff-style message on mismatch.
struct Checker {
  std::ostream& out;
  int failures = 0;

  void close(const std::string& label, double expected, double actual, double tol) {
    if (std::abs(expected - actual) <= tol) {
      out << "  ok   " << label << " = " << actual << "\n";
    } else {
      ++failures;
      out << "  FAIL " << label << ": expected " << expected << ", got " << actual
          << " (diff " << actual - expected << ")\n";
    }
  }
  void is_true(const std::string& label, bool cond, const std::string& detail = "") {
    if (cond) {
      out << "  ok   " << label << "\n";
    } else {
      ++failures;
      out << "  FAIL " << label << (detail.empty() ? "" : ": " + detail) << "\n";
    }
  }
  void equals(const std::string& label, const std::string& expected,
              const std::string& actual) {
    is_true(label + " = " + expected, expected == actual,
            "expected " + expected + ", got " + actual);
  }
};

int reproduce_dim21(std::ostream& out) {
  Checker ck{out};
  Scenario sc = parse_scenario(kDyadDim, "dim-2.1");
  TauResult t = tau(sc.spec, sc.model, sc.mech, sc.net, sc.ctxs);
  ck.close("tau(1,0)", -1.0, t.value, kTol);
  bool all_one = true;
  for (int i : mask_units(resolve_subpop(sc.spec, sc.net)))
    for (const auto& e :
         comparison_set(Criterion::kPartial, sc.spec, sc.model, sc.net, sc.ctxs, i).entries)
      if (std::abs(e.value - 1.0) > kTol) all_one = false;
  ck.is_true("all treatment-sign comparison entries equal +1", all_one);
  SignVerdict sv = check_sign_preservation(Criterion::kPartial, sc.spec, sc.model, sc.mech,
                                           sc.net, sc.ctxs);
  ck.equals("partial verdict", "VIOLATION", verdict_name(sv.verdict));

  // Symbolic mechanism: conditional rows (p1..p4) realized as an explicit
  // joint with q01 = q10, pinned by the conditional identities.
  const double grid[][2] = {{0.2, 0.3}, {0.5, 0.5}, {0.7, 0.2}, {0.3, 0.8}, {0.9, 0.6}};
  for (auto [p2, p3] : grid) {
    double p4 = 1 - p2, p1 = 1 - p3;
    double s = 1.0 / (2 + p4 / p2 + p1 / p3);
    Law joint;
    joint[0b01] = s;              // D = (1,0)
    joint[0b10] = s;              // D = (0,1)
    joint[0b11] = s * p4 / p2;    // D = (1,1)
    joint[0b00] = s * p1 / p3;    // D = (0,0)
    Mechanism mech = Mechanism::explicit_table(2, {joint});
    double got = tau(sc.spec, sc.model, mech, sc.net, sc.ctxs).value;
    std::ostringstream label;
    label << "tau = 3p4 + p2 - 2p3 at (p2,p3) = (" << p2 << "," << p3 << ")";
    ck.close(label.str(), 3 * p4 + p2 - 2 * p3, got, kTol);
  }
  return ck.failures ? 3 : 0;
}

int reproduce_spill32(std::ostream& out) {
  Checker ck{out};
  Scenario sc = parse_scenario(kTriadSpillover, "spill-3.2");
  Bits pop = resolve_subpop(sc.spec, sc.net);
  ck.is_true("subpopulation is {1,3}", pop == (bit(0) | bit(2)));
  TauResult t = tau(sc.spec, sc.model, sc.mech, sc.net, sc.ctxs);
  TauStarResult ts = tau_star(sc.spec, sc.model, sc.mech, sc.net, sc.ctxs);
  TauStarResult rn = bias_Rn(sc.spec, sc.model, sc.mech, sc.net, sc.ctxs);
  ck.close("tau((1,1),(1,0))", -1.0, t.value, kTol);
  ck.close("tau*", 1.0, ts.value, kTol);
  ck.close("R_n", -2.0, rn.value, kTol);
  ck.close("decomposition tau - (tau* + R_n)", 0.0, t.value - (ts.value + rn.value), kTol);
  SignVerdict general = check_sign_preservation(Criterion::kGeneral, sc.spec, sc.model,
                                                sc.mech, sc.net, sc.ctxs);
  SignVerdict partial = check_sign_preservation(Criterion::kPartial, sc.spec, sc.model,
                                                sc.mech, sc.net, sc.ctxs);
  ck.equals("general verdict", "VACUOUS", verdict_name(general.verdict));
  ck.equals("partial verdict", "VIOLATION", verdict_name(partial.verdict));
  return ck.failures ? 3 : 0;
}

int reproduce_ordered41(std::ostream& out) {
  Checker ck{out};
  Scenario sc = parse_scenario(kQuadOrdered, "ordered-4.1");
  TauResult t = tau(sc.spec, sc.model, sc.mech, sc.net, sc.ctxs);
  ck.close("tau((1,2),(1,1))", -1.0, t.value, kTol);
  SignVerdict partial = check_sign_preservation(Criterion::kPartial, sc.spec, sc.model,
                                                sc.mech, sc.net, sc.ctxs);
  ck.equals("partial verdict", "VACUOUS", verdict_name(partial.verdict));
  // The mixed premise is witnessed by Y_1(1,1,1,0) - Y_1(1,0,0,1) < 0.
  bool witness_found = false;
  for (const auto& e :
       comparison_set(Criterion::kPartial, sc.spec, sc.model, sc.net, sc.ctxs, 0).entries)
    if (e.d == 0b0111 && e.d_prime == 0b1001 && e.value < 0) witness_found = true;
  ck.is_true("mixed-premise witness Y_1(1110) - Y_1(1001) < 0", witness_found);
  SignVerdict ordered = check_sign_preservation(Criterion::kOrdered, sc.spec, sc.model,
                                                sc.mech, sc.net, sc.ctxs);
  ck.equals("ordered verdict", "VIOLATION", verdict_name(ordered.verdict));
  ck.equals("ordered premise", "all_nonnegative", premise_name(ordered.premise));
  return ck.failures ? 3 : 0;
}

int reproduce_coupling(std::ostream& out) {
  Checker ck{out};
  Network star(4, {{1, 2}, {1, 3}, {1, 4}});
  const int ego = 0, d = 1, tau_hi = 2, tau_lo = 1;
  const double p = 0.3;
  CouplingLaw law = exact_coupling_law(star, ego, d, tau_hi, tau_lo, p);

  Mechanism mech = Mechanism::product_bernoulli(4, {p});
  ContextSet ctxs = ContextSet::single();
  ExposureSpec f;
  f.kind = ExposureKind::kNeighborCount;
  Law cond_hi = conditional_law(mech, ctxs, 0, f, star, ego,
                                ExposureValue::pair_value(d, tau_hi));
  Law cond_lo = conditional_law(mech, ctxs, 0, f, star, ego,
                                ExposureValue::pair_value(d, tau_lo));
  ck.close("TV(high marginal, conditional law at t)", 0.0,
           total_variation(law.high, cond_hi), kTol);
  ck.close("TV(low marginal, conditional law at t')", 0.0,
           total_variation(law.low, cond_lo), kTol);

  bool ordered = true;
  for (const auto& [pair, w] : law.joint)
    if (pair.first & ~pair.second) ordered = false;
  ck.is_true("joint law supported on high >= low", ordered);

  // Neighborhood marginal of the high law is uniform over the C(3,2) patterns.
  std::map<Bits, double> nbhd_marginal;
  for (const auto& [assignment, w] : law.high)
    nbhd_marginal[assignment & star.neighbors(ego)] += w;
  bool uniform = nbhd_marginal.size() == 3;
  for (const auto& [pattern, w] : nbhd_marginal)
    if (std::abs(w - 1.0 / 3) > kTol) uniform = false;
  ck.is_true("high neighborhood marginal uniform over C(3,2) patterns", uniform);

  std::mt19937_64 rng(20240826);
  int bad = 0;
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    CoupledPair cp = sample_coupled_pair(star, ego, d, tau_hi, tau_lo, p, rng);
    if ((cp.low & ~cp.high) || popcount(cp.high & star.neighbors(ego)) != tau_hi ||
        popcount(cp.low & star.neighbors(ego)) != tau_lo || !has_bit(cp.low, ego) ||
        !has_bit(cp.high, ego))
      ++bad;
  }
  ck.is_true("order and count invariants on " + std::to_string(draws) + " sampled pairs",
             bad == 0, std::to_string(bad) + " violations");
  return ck.failures ? 3 : 0;
}

int reproduce_game(std::ostream& out) {
  Checker ck{out};
  Scenario sc = parse_scenario(kGameProp1, "game-prop1");
  ck.is_true("mechanism is game-induced", sc.mech.type() == Mechanism::Type::kGameInduced);
  GameSolution sol = solve_incomplete_info_game(*sc.game, 0);
  ck.close("unit 1 adoption probability", 0.5, sol.adopt_prob[0], kTol);
  ck.close("unit 2 adoption probability", 0.5, sol.adopt_prob[1], kTol);
  ck.is_true("high types adopt, low types do not",
             sol.profile[0] == std::vector<int>{0, 1} &&
                 sol.profile[1] == std::vector<int>{0, 1});
  if (sol.multiple_equilibria)
    out << "  note: a second fixed point exists from the all-ones start\n";
  auto ui = check_unit_independence(sc.mech, 0);
  ck.is_true("induced mechanism passes unit independence", ui.holds);
  bool ci_ok = true;
  for (int i = 0; i < 2; ++i) {
    auto v = check_ci_selection(sc.mech, sc.ctxs, 0, sc.spec.exposure, sc.net, i, sc.spec.t,
                                sc.spec.t_prime);
    if (!v.holds) ci_ok = false;
  }
  ck.is_true("induced mechanism passes CI selection", ci_ok);
  return ck.failures ? 3 : 0;
}

}  // namespace

const char* builtin_scenario_text(const std::string& id) {
  if (id == "dim-2.1" || id == "dyad_dim") return kDyadDim;
  if (id == "spill-3.2" || id == "triad_spillover") return kTriadSpillover;
  if (id == "ordered-4.1" || id == "quad_ordered") return kQuadOrdered;
  if (id == "game-prop1" || id == "game_prop1") return kGameProp1;
  return nullptr;
}

std::vector<std::string> reproduction_ids() {
  return {"dim-2.1", "spill-3.2", "ordered-4.1", "coupling-thm3", "game-prop1"};
}

int reproduce(const std::string& id, std::ostream& out) {
  out << "reproduce " << id << "\n";
  int rc;
  if (id == "dim-2.1")
    rc = reproduce_dim21(out);
  else if (id == "spill-3.2")
    rc = reproduce_spill32(out);
  else if (id == "ordered-4.1")
    rc = reproduce_ordered41(out);
  else if (id == "coupling-thm3")
    rc = reproduce_coupling(out);
  else if (id == "game-prop1")
    rc = reproduce_game(out);
  else
    throw ValidationError("unknown reproduction id '" + id + "'");
  out << (rc == 0 ? "PASS" : "FAIL") << " " << id << "\n";
  return rc;
}

}  // namespace explab
