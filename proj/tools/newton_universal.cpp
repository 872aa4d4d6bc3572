#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "newton_universal/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Certified Newton, contraction and continuous-Newton solvers"};
  app.require_subcommand(1);

  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool quiet = false;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "JSON run configuration")->required();
    sub->add_option("--output-dir", output_dir, "Directory for outputs (overrides config)");
    sub->add_option("--seed", seed, "Random seed (overrides config and NEWTON_UNIVERSAL_SEED)");
    sub->add_flag("--quiet", quiet, "Suppress the summary line");
    return sub;
  };
  CLI::App* certify = add("certify", "Build the certificate and write certificate.json");
  CLI::App* solve = add("solve", "Run solvers, write traces and report.json");
  CLI::App* sweep = add("sweep", "Newton rate study over alpha and q grids, write sweep.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nu::cli::kConfigError;
  }

  nu::cli::Overrides o;
  o.quiet = quiet;
  if (!output_dir.empty()) o.output_dir = output_dir;
  for (CLI::App* sub : {certify, solve, sweep})
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;

  if (certify->parsed()) return nu::cli::cmd_certify(config, o);
  if (solve->parsed()) return nu::cli::cmd_solve(config, o);
  return nu::cli::cmd_sweep(config, o);
}
