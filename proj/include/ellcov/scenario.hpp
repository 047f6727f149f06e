#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ellcov/schlesinger.hpp"
#include "ellcov/state_io.hpp"

namespace ellcov {

struct CheckRecord {
  std::string name;
  cplx value;        // measured residual (or ratio)
  double tolerance;  // pass iff |value| < tolerance (ratio checks: see name)
  bool pass;
  std::string error;  // set when the check raised instead of producing a value
};

struct ScenarioConfig {
  std::string scenario;
  unsigned seed = 7;
  // Scenario parameters with every default filled in.
  Json params;
  // Effective tolerances, keyed by check family.
  Json tolerances;
  std::optional<std::string> output_path;
  std::string format = "json";

  Json to_json() const;
};

struct Report {
  ScenarioConfig config;
  std::vector<CheckRecord> checks;
  Json environment;

  bool passed() const;
};

std::vector<std::string> scenario_names();

// Validates the document, fills defaults and rejects unknown fields with
// ConfigError.
ScenarioConfig parse_config(const Json& doc);

// Numerical failures become failed checks; only ConfigError escapes.
Report run_scenario(const ScenarioConfig& cfg);

// Columns check_name, value_re, value_im, abs_value, tolerance, pass.
std::string report_csv(const Report& r);
// Without the environment stamp the output depends only on the config.
std::string report_json(const Report& r, bool with_environment = true);

// Coupled state on the two-sheet covering of l with L points Q_j and
// residues drawn from one generator seeded with seed. The Q_j keep their
// images away from every gamma_m and from each other.
CoupledState seeded_coupled_state(const BranchPoints& l, int K, int L, unsigned seed);

}  // namespace ellcov
