#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "explab/estimands.hpp"

namespace explab {

inline constexpr const char* kToolVersion = "explab 1.0";

// A fully validated bundle: network, contexts, outcome model, mechanism,
// estimand and requested checks. Built from a scenario file; probabilities,
// assignment-string lengths and referential integrity are checked on load,
// and every validation problem is reported at once.
struct Scenario {
  std::string name;
  std::string digest;
  Network net;
  ContextSet ctxs;
  OutcomeModel model;
  std::optional<SelectionGame> game;  // present for game-induced mechanisms
  Mechanism mech;
  EstimandSpec spec;
  std::vector<std::string> checks;  // empty = run everything applicable
  std::uint64_t seed = 0;

  bool wants(const std::string& check) const;
};

Scenario parse_scenario(const std::string& json_text, const std::string& name);
Scenario load_scenario(const std::string& path);

struct RunFlags {
  bool json_only = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_n;
};

struct Report {
  std::string json;   // machine-readable; deterministic given (scenario, seed)
  std::string table;  // human-readable summary (includes runtime)
  int exit_code = 0;
};

Report run_scenario(const Scenario& sc, const RunFlags& flags);

// Embedded copies of the bundled scenarios, keyed by reproduction id
// (dim-2.1, spill-3.2, ordered-4.1, coupling-thm3, game-prop1) or by file
// stem (dyad_dim, triad_spillover, quad_ordered, game_prop1).
const char* builtin_scenario_text(const std::string& id);

// Runs one golden reproduction; prints a pass/fail summary with diffs.
// Returns 0 on pass, 3 on assertion failure.
int reproduce(const std::string& id, std::ostream& out);

std::vector<std::string> reproduction_ids();

}  // namespace explab
