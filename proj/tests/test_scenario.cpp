#include <fstream>
#include <sstream>

#include "doctest.h"
#include "explab/scenario.hpp"
#include "json.hpp"

using namespace explab;

TEST_CASE("bundled scenario texts parse and carry stable digests") {
  for (const char* id : {"dim-2.1", "spill-3.2", "ordered-4.1", "game-prop1"}) {
    const char* text = builtin_scenario_text(id);
    REQUIRE(text != nullptr);
    Scenario sc = parse_scenario(text, id);
    CHECK(sc.digest.size() == 16);
    CHECK(sc.net.n() >= 2);
  }
  CHECK(builtin_scenario_text("coupling-thm3") == nullptr);  // code path, not a file
  CHECK(builtin_scenario_text("nope") == nullptr);
  CHECK(reproduction_ids().size() == 5);
}

TEST_CASE("files on disk match the embedded copies") {
  const std::pair<const char*, const char*> files[] = {
      {"dyad_dim", "scenarios/dyad_dim.scn"},
      {"triad_spillover", "scenarios/triad_spillover.scn"},
      {"quad_ordered", "scenarios/quad_ordered.scn"},
      {"game_prop1", "scenarios/game_prop1.scn"},
  };
  for (auto [id, path] : files) {
    std::ifstream in(path);
    if (!in) in.open(std::string("../") + path);
    REQUIRE_MESSAGE(in.good(), path);
    std::ostringstream ss;
    ss << in.rdbuf();
    Scenario from_file = parse_scenario(ss.str(), id);
    Scenario embedded = parse_scenario(builtin_scenario_text(id), id);
    CHECK(nlohmann::json::parse(ss.str()) ==
          nlohmann::json::parse(builtin_scenario_text(id)));
    CHECK(from_file.net.n() == embedded.net.n());
  }
}

TEST_CASE("validation accumulates all errors in one message") {
  const char* broken = R"({
    "n": 2,
    "edges": [[1, 2]],
    "outcomes": {"entries": [
      {"unit": 1, "assignment": "101", "value": 1}
    ]},
    "mechanism": {"type": "explicit", "rows": [
      {"assignment": "10", "prob": 0.5},
      {"assignment": "01", "prob": 0.4}
    ]},
    "estimand": {"exposure": {"kind": "dim"}, "t": "1", "t_prime": "0"}
  })";
  try {
    parse_scenario(broken, "broken");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("assignment") != std::string::npos);  // wrong length
    CHECK(msg.find("mechanism") != std::string::npos);   // mass 0.9
  }
}

TEST_CASE("malformed JSON and unknown fields are rejected") {
  CHECK_THROWS_AS(parse_scenario("{not json", "x"), ValidationError);
  CHECK_THROWS_AS(parse_scenario(R"({"n": 2})", "x"), ValidationError);
  CHECK_THROWS_AS(
      parse_scenario(
          R"({"n": 2, "edges": [], "outcomes": {"default": 0, "entries": []},
              "mechanism": {"type": "warp"},
              "estimand": {"exposure": {"kind": "dim"}, "t": "1", "t_prime": "0"}})",
          "x"),
      ValidationError);
}

TEST_CASE("reports are deterministic and versioned") {
  Scenario sc = parse_scenario(builtin_scenario_text("spill-3.2"), "spill");
  RunFlags flags{true, 42u, std::nullopt};
  Report a = run_scenario(sc, flags);
  Report b = run_scenario(sc, flags);
  CHECK(a.json == b.json);
  CHECK(a.exit_code == 0);
  auto j = nlohmann::json::parse(a.json);
  CHECK(j.at("version") == kToolVersion);
  CHECK(j.at("seed") == 42);
  CHECK(j.at("digest") == sc.digest);
  CHECK(j.at("tau").get<double>() == doctest::Approx(-1.0));
  CHECK(j.at("tau_star").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("r_n").get<double>() == doctest::Approx(-2.0));
  // Human table exists unless suppressed downstream; report carries both.
  CHECK(b.table.find("tau") != std::string::npos);
}

TEST_CASE("reproduce rejects unknown ids and passes on the goldens") {
  std::ostringstream sink;
  CHECK_THROWS_AS(reproduce("made-up", sink), ValidationError);
  for (const auto& id : reproduction_ids()) {
    std::ostringstream out;
    CHECK(reproduce(id, out) == 0);
    CHECK(out.str().find("PASS " + id) != std::string::npos);
  }
}

TEST_CASE("multi-context scenarios weight and check per context") {
  const char* two_ctx = R"({
    "n": 2,
    "edges": [[1, 2]],
    "contexts": [
      {"id": "a", "weight": 0.5, "covariates": [0]},
      {"id": "b", "weight": 0.5, "covariates": [1]}
    ],
    "outcomes": {"default": 0, "entries": [
      {"context": "a", "unit": 1, "assignment": "10", "value": 1},
      {"context": "b", "unit": 1, "assignment": "10", "value": 3}
    ]},
    "mechanism": [
      {"context": "a", "type": "bernoulli", "p": [0.5, 0.5]},
      {"context": "b", "type": "bernoulli", "p": [0.25, 0.5]}
    ],
    "estimand": {"exposure": {"kind": "dim"}, "t": "1", "t_prime": "0", "subpop": [1]}
  })";
  Scenario sc = parse_scenario(two_ctx, "two_ctx");
  REQUIRE(sc.ctxs.size() == 2);
  RunFlags flags{true, std::nullopt, std::nullopt};
  Report rep = run_scenario(sc, flags);
  auto j = nlohmann::json::parse(rep.json);
  // E[Y|T=1] averages over the partner's assignment: context a gives 0.5,
  // context b gives 1.5; T=0 gives zero in both.
  CHECK(j.at("tau").get<double>() == doctest::Approx(0.5 * 0.5 + 0.5 * 1.5));
}
