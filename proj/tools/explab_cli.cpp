#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "explab/scenario.hpp"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;

// 0 ok, 1 validation, 2 overlap/precondition, 3 reproduction failure.
constexpr int kOk = 0, kValidation = 1, kPrecondition = 2, kRepro = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw explab::ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int classify(const std::exception& e) {
  if (dynamic_cast<const explab::OverlapViolation*>(&e) ||
      dynamic_cast<const explab::PindownViolation*>(&e) ||
      dynamic_cast<const explab::EmptySubpopulation*>(&e) ||
      dynamic_cast<const explab::CapExceeded*>(&e) ||
      dynamic_cast<const explab::NoConvergence*>(&e))
    return kPrecondition;
  return kValidation;
}

int cmd_run(const std::string& path, const explab::RunFlags& flags) {
  explab::Scenario sc = explab::load_scenario(path);
  if (flags.max_n && sc.net.n() > *flags.max_n)
    throw explab::CapExceeded("scenario has n = " + std::to_string(sc.net.n()) +
                              " > --max-n " + std::to_string(*flags.max_n));
  explab::Report rep = explab::run_scenario(sc, flags);
  std::cout << rep.json << "\n";
  if (!flags.json_only) std::cout << rep.table;
  return rep.exit_code;
}

int cmd_validate(const std::string& path) {
  explab::Scenario sc = explab::load_scenario(path);
  std::cout << "valid: " << sc.name << " (n = " << sc.net.n() << ", digest " << sc.digest
            << ")\n";
  return kOk;
}

int cmd_search(const std::string& path, std::optional<std::uint64_t> seed,
               std::optional<long> budget, std::optional<int> max_n, bool json_only) {
  ordered_json cfg = ordered_json::parse(slurp(path));
  explab::SearchConfig sc;
  std::string target = cfg.value("target", "dim_general");
  if (target == "dim_general")
    sc.target = explab::SearchConfig::Target::kDimGeneral;
  else if (target == "fraction_monotone")
    sc.target = explab::SearchConfig::Target::kFractionMonotone;
  else if (target == "partial_bernoulli")
    sc.target = explab::SearchConfig::Target::kPartialBernoulli;
  else
    throw explab::ValidationError("unknown search target '" + target + "'");
  sc.n = cfg.value("n", sc.n);
  sc.seed = cfg.value("seed", sc.seed);
  sc.budget = cfg.value("budget", sc.budget);
  if (cfg.contains("value_grid"))
    sc.value_grid = cfg["value_grid"].get<std::vector<double>>();
  if (seed) sc.seed = *seed;
  if (budget) sc.budget = *budget;
  if (max_n) sc.n = std::min(sc.n, *max_n);

  auto found = explab::search_reversals(sc);
  ordered_json out;
  out["target"] = target;
  out["seed"] = sc.seed;
  out["budget"] = sc.budget;
  out["candidates_with_reversal"] = found.size();
  out["reversals"] = ordered_json::array();
  for (const auto& r : found) {
    ordered_json j;
    j["candidate"] = r.candidate;
    j["criterion"] = explab::criterion_name(r.kind);
    j["tau"] = r.verdict.tau_value;
    j["premise"] = explab::premise_name(r.verdict.premise);
    j["verdict"] = explab::verdict_name(r.verdict.verdict);
    out["reversals"].push_back(j);
  }
  std::cout << out.dump(2) << "\n";
  if (!json_only)
    std::cout << "search: " << found.size() << " sign reversal(s) in " << sc.budget
              << " candidates\n";
  return kOk;
}

int cmd_coupling(const std::string& path, std::optional<std::uint64_t> seed,
                 bool json_only) {
  ordered_json cfg = ordered_json::parse(slurp(path));
  int n = cfg.at("n").get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : cfg.at("edges")) edges.emplace_back(e.at(0), e.at(1));
  explab::Network net(n, edges);
  int ego = cfg.at("ego").get<int>() - 1;
  int own = cfg.value("own", 1);
  int tau_hi = cfg.at("tau").get<int>();
  int tau_lo = cfg.at("tau_prime").get<int>();
  std::vector<double> p;
  if (cfg.at("p").is_array())
    p = cfg["p"].get<std::vector<double>>();
  else
    p.assign(n, cfg["p"].get<double>());
  long samples = cfg.value("samples", 0L);
  if (ego < 0 || ego >= n) throw explab::ValidationError("ego out of range");

  try {
    explab::CouplingLaw law = explab::exact_coupling_law(net, ego, own, tau_hi, tau_lo, p);
    explab::Mechanism mech = explab::Mechanism::product_bernoulli(n, p);
    explab::ContextSet ctxs = explab::ContextSet::single();
    explab::ExposureSpec f;
    f.kind = explab::ExposureKind::kNeighborCount;
    explab::Law cond_hi = explab::conditional_law(
        mech, ctxs, 0, f, net, ego, explab::ExposureValue::pair_value(own, tau_hi));
    explab::Law cond_lo = explab::conditional_law(
        mech, ctxs, 0, f, net, ego, explab::ExposureValue::pair_value(own, tau_lo));
    double tv_hi = explab::total_variation(law.high, cond_hi);
    double tv_lo = explab::total_variation(law.low, cond_lo);
    bool ordered = true;
    for (const auto& [pair, w] : law.joint)
      if (pair.first & ~pair.second) ordered = false;

    long sampled_ok = 0;
    if (samples > 0) {
      std::mt19937_64 rng(seed.value_or(0));
      for (long s = 0; s < samples; ++s) {
        auto cp = explab::sample_coupled_pair(net, ego, own, tau_hi, tau_lo, p, rng);
        if (!(cp.low & ~cp.high)) ++sampled_ok;
      }
    }

    ordered_json out;
    out["version"] = explab::kToolVersion;
    out["n"] = n;
    out["ego"] = ego + 1;
    out["tau"] = tau_hi;
    out["tau_prime"] = tau_lo;
    out["tv_high_vs_conditional"] = tv_hi;
    out["tv_low_vs_conditional"] = tv_lo;
    out["joint_respects_order"] = ordered;
    if (samples > 0) {
      out["samples"] = samples;
      out["samples_respecting_order"] = sampled_ok;
    }
    std::cout << out.dump(2) << "\n";
    bool pass = tv_hi <= explab::kTol && tv_lo <= explab::kTol && ordered &&
                (samples == 0 || sampled_ok == samples);
    if (!json_only)
      std::cout << "coupling: " << (pass ? "marginals match, order holds" : "MISMATCH")
                << "\n";
    return pass ? kOk : kRepro;
  } catch (const explab::ValidationError& e) {
    std::cerr << "precondition: " << e.what() << "\n";
    return kPrecondition;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact laboratory for exposure-mapping estimands under interference"};
  app.require_subcommand(1);

  std::string file, id, config;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_n;
  std::optional<long> budget;
  bool json_only = false;
  app.add_option("--seed", seed, "RNG seed for randomized paths");
  app.add_option("--max-n", max_n, "refuse scenarios with more units");
  app.add_option("--budget", budget, "candidate budget for search");
  app.add_flag("--json-only", json_only, "suppress the human-readable table");

  auto* run = app.add_subcommand("run", "evaluate a scenario file");
  run->add_option("file", file)->required();
  auto* rep = app.add_subcommand("reproduce", "run a bundled golden reproduction");
  std::string ids;
  for (const auto& r : explab::reproduction_ids()) ids += (ids.empty() ? "" : ", ") + r;
  rep->add_option("id", id, "one of: " + ids + ", all")->required();
  auto* search = app.add_subcommand("search", "randomized sign-reversal search");
  search->add_option("config", config)->required();
  auto* coup = app.add_subcommand("coupling-test", "verify the urn coupling on a network");
  coup->add_option("config", config)->required();
  auto* val = app.add_subcommand("validate", "parse and validate a scenario file");
  val->add_option("file", file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      explab::RunFlags flags{json_only, seed, max_n};
      return cmd_run(file, flags);
    }
    if (rep->parsed()) {
      if (id == "all") {
        int rc = kOk;
        for (const auto& r : explab::reproduction_ids())
          if (explab::reproduce(r, std::cout) != 0) rc = kRepro;
        return rc;
      }
      return explab::reproduce(id, std::cout);
    }
    if (search->parsed()) return cmd_search(config, seed, budget, max_n, json_only);
    if (coup->parsed()) return cmd_coupling(config, seed, json_only);
    if (val->parsed()) return cmd_validate(file);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  }
  return kOk;
}
