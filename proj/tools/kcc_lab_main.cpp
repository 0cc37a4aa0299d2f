// kcc-lab command line front end: run / scan / validate over an analysis
// config file. Exit codes: 0 success, 1 run finished with diagnostics,
// 2 config or usage error.

#include <string>

#include <CLI11.hpp>

#include "kcclab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Geometric (Jacobi) and linear stability analysis of planar "
               "dynamical systems"};
  app.require_subcommand(1);

  std::string run_config, scan_config, validate_config;
  CLI::App* run = app.add_subcommand("run", "execute every requested output of a config");
  run->add_option("config", run_config, "analysis config file")->required();
  CLI::App* scan = app.add_subcommand("scan", "evaluate the deviation curvature over the config's grid");
  scan->add_option("config", scan_config, "analysis config file")->required();
  CLI::App* validate = app.add_subcommand("validate", "parse and validate a config, run nothing");
  validate->add_option("config", validate_config, "analysis config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return kcclab::run_command(run_config);
  if (scan->parsed()) return kcclab::scan_command(scan_config);
  return kcclab::validate_command(validate_config);
}
