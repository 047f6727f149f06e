// Scenario runner.
//
//   ellcov-harness list-scenarios
//   ellcov-harness run --config cfg.json [--out report.json] [--format csv|json]
//
// Exit status: 0 all checks pass, 1 some check failed, 2 config or IO error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ellcov/errors.hpp"
#include "ellcov/scenario.hpp"

namespace {

int run(const std::string& config_path, const std::string& out_override, const std::string& format_override) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot open config '" << config_path << "'\n";
    return 2;
  }
  ellcov::Json doc;
  try {
    doc = ellcov::Json::parse(in);
  } catch (const ellcov::Json::parse_error& e) {
    std::cerr << "error: " << config_path << ": " << e.what() << "\n";
    return 2;
  }

  ellcov::Report report;
  try {
    ellcov::ScenarioConfig cfg = ellcov::parse_config(doc);
    if (!out_override.empty()) cfg.output_path = out_override;
    if (!format_override.empty()) cfg.format = format_override;
    report = ellcov::run_scenario(cfg);
  } catch (const ellcov::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const std::string body =
      report.config.format == "csv" ? ellcov::report_csv(report) : ellcov::report_json(report);
  if (report.config.output_path) {
    std::ofstream out(*report.config.output_path);
    if (!out || !(out << body)) {
      std::cerr << "error: cannot write '" << *report.config.output_path << "'\n";
      return 2;
    }
  } else {
    std::cout << body;
  }

  std::size_t failed = 0;
  for (const auto& c : report.checks) {
    if (c.pass) continue;
    ++failed;
    std::cerr << "FAIL " << c.name << " |value| = " << std::abs(c.value) << " tolerance " << c.tolerance;
    if (!c.error.empty()) std::cerr << " (" << c.error << ")";
    std::cerr << "\n";
  }
  std::cerr << report.config.scenario << ": " << report.checks.size() - failed << "/" << report.checks.size()
            << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for isomonodromic flows on elliptic coverings"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-scenarios", "Print the available scenarios");
  auto* runc = app.add_subcommand("run", "Run a scenario described by a JSON config");
  std::string config, out, format;
  runc->add_option("--config", config, "Scenario config (JSON)")->required();
  runc->add_option("--out", out, "Report path; overrides output.path");
  runc->add_option("--format", format, "Report format; overrides output.format")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*list) {
    for (const auto& name : ellcov::scenario_names()) std::cout << name << "\n";
    return 0;
  }
  return run(config, out, format);
}
