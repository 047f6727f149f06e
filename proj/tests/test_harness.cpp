#include <sstream>

#include "doctest.h"
#include "ellcov/errors.hpp"
#include "ellcov/scenario.hpp"
#include "ellcov/state_io.hpp"

using namespace ellcov;

namespace {

const BranchPoints kBase{cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(2.3, 0.4), cplx(4.0, -0.3)};

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (const char c : s) n += (c == '\n');
  return n;
}

}  // namespace

TEST_CASE("covering state round trip") {
  const auto s = two_sheet_covering(kBase);
  const Json j = covering_to_json(s);
  const auto back = covering_from_json(Json::parse(j.dump()));
  CHECK(back.N == s.N);
  CHECK(back.mu.value() == s.mu.value());
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(back.lambda[k] == s.lambda[k]);
    CHECK(back.gamma[k] == s.gamma[k]);
    CHECK(back.alpha[k] == s.alpha[k]);
  }
  CHECK(covering_to_json(back).dump() == j.dump());

  Json extra = j;
  extra["colour"] = "red";
  CHECK_THROWS_AS(covering_from_json(extra), StateFormatError);
  Json broken = j;
  broken["mu"] = Json::array({0.0});
  CHECK_THROWS_AS(covering_from_json(broken), StateFormatError);
  broken = j;
  broken.erase("gamma");
  CHECK_THROWS_AS(covering_from_json(broken), StateFormatError);
}

TEST_CASE("J and Schlesinger state round trips") {
  const auto cov = two_sheet_covering(kBase);
  const CoupledState c = seeded_coupled_state(kBase, 3, 2, 11);
  const JState J = induced_j(make_context(cov, 3), c);
  const JState Jb = jstate_from_json(Json::parse(jstate_to_json(J).dump()));
  REQUIRE(Jb.size() == J.size());
  for (std::size_t m = 0; m < J.size(); ++m) CHECK(Jb.J[m].values() == J.J[m].values());

  const Json sj = schlesinger_to_json(c.sch, 11u);
  CHECK(sj["seed"] == 11);
  const SchlesingerState sb = schlesinger_from_json(Json::parse(sj.dump()));
  CHECK(sb.z == c.sch.z);
  for (std::size_t j = 0; j < sb.L(); ++j) CHECK(sb.A[j].values() == c.sch.A[j].values());
  CHECK(schlesinger_to_json(sb, 11u).dump() == sj.dump());

  Json bad = sj;
  bad["residues"]["A[5].01"] = Json::array({0.0, 0.0});
  CHECK_THROWS_AS(schlesinger_from_json(bad), StateFormatError);
  bad = sj;
  bad["K"] = 11;
  CHECK_THROWS_AS(schlesinger_from_json(bad), StateFormatError);
}

TEST_CASE("config parsing") {
  const auto names = scenario_names();
  CHECK(names.size() == 5);

  const ScenarioConfig cfg = parse_config(Json::parse(R"({"scenario": "two-sheet-flow"})"));
  CHECK(cfg.seed == 7);
  CHECK(cfg.params.contains("branch_points"));
  CHECK(cfg.params["delta"].is_array());  // filled from the branch-point scale
  CHECK(cfg.tolerances["rauch"] == 1e-5);
  CHECK(cfg.format == "json");

  CHECK_THROWS_AS(parse_config(Json::parse(R"({"scenario": "nope"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"scenario": "identity-suite", "colour": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"scenario": "identity-suite", "tolerances": {"bogus": 1}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"scenario": "identity-suite", "output": {"format": "xml"}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"scenario": "identity-suite", "mu": [0, -1]})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"scenario": "identity-suite", "K": 1})")), ConfigError);
}

TEST_CASE("duplicate branch points name the pair") {
  const Json doc = Json::parse(R"({"scenario": "two-sheet-flow",
                                   "branch_points": [[0, 0], [1, 0], [2, 1], [1, 0]]})");
  try {
    parse_config(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("branch_points[1] and branch_points[3]") != std::string::npos);
  }
}

TEST_CASE("identity suite at K = 2, mu = i") {
  const ScenarioConfig cfg =
      parse_config(Json::parse(R"({"scenario": "identity-suite", "K": 2, "mu": [0, 1], "seed": 7})"));
  const Report r = run_scenario(cfg);
  CHECK(r.checks.size() >= 12);
  for (const auto& c : r.checks) CHECK_MESSAGE(c.pass, c.name);
  CHECK(r.passed());
}

TEST_CASE("reports") {
  Report empty;
  empty.config = parse_config(Json::parse(R"({"scenario": "identity-suite"})"));
  CHECK(report_csv(empty) == "check_name,value_re,value_im,abs_value,tolerance,pass\n");
  CHECK(empty.passed());

  const ScenarioConfig cfg = parse_config(Json::parse(R"({"scenario": "identity-suite", "samples": 5})"));
  const Report a = run_scenario(cfg);
  CHECK(line_count(report_csv(a)) == a.checks.size() + 1);

  // Byte-identical without the environment stamp.
  const Report b = run_scenario(cfg);
  CHECK(report_json(a, false) == report_json(b, false));

  const Json j = Json::parse(report_json(a));
  CHECK(j["scenario"] == "identity-suite");
  CHECK(j["seed"] == 7);
  CHECK(j["status"] == "pass");
  CHECK(j["checks"].size() == a.checks.size());
  CHECK(j["environment"].contains("theta_kernel"));
  // The echoed config parses back to the same effective config.
  const ScenarioConfig echo = parse_config(j["config"]);
  CHECK(echo.to_json().dump() == cfg.to_json().dump());
}

TEST_CASE("numerical failures become failed checks") {
  // Tolerances far below double resolution turn every check red without
  // throwing out of run_scenario.
  const ScenarioConfig cfg = parse_config(
      Json::parse(R"({"scenario": "two-sheet-flow", "tolerances": {"thomae": 1e-300, "alpha_sum": 1e-300}})"));
  const Report r = run_scenario(cfg);
  CHECK_FALSE(r.passed());

  // Cuts that cross: the a-cycle check records an error instead of a value.
  const ScenarioConfig crossing = parse_config(Json::parse(R"({"scenario": "two-sheet-flow",
      "branch_points": [[0, 0], [2, 0], [1, -1], [1, 1]]})"));
  const Report rc = run_scenario(crossing);
  bool found = false;
  for (const auto& c : rc.checks) {
    if (c.name != "a_cycle_closure") continue;
    found = true;
    CHECK_FALSE(c.pass);
    CHECK_FALSE(c.error.empty());
  }
  CHECK(found);
}

TEST_CASE("seeded coupled states are reproducible") {
  const CoupledState a = seeded_coupled_state(kBase, 2, 3, 5);
  const CoupledState b = seeded_coupled_state(kBase, 2, 3, 5);
  CHECK(a.sch.z == b.sch.z);
  CHECK(a.sch.A[2].values() == b.sch.A[2].values());
  const CoupledState c = seeded_coupled_state(kBase, 2, 3, 6);
  CHECK(a.sch.z != c.sch.z);
}
