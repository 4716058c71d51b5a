#include "hcmpc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneously constrained MPC: simulation, horizon sweeps and suboptimality bounds"};
  app.require_subcommand(1);
  hcmpc::CommandOptions opts;
  int jobs = 0;
  std::string provenance, delta, nu;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Scenario file (YAML)")->required();
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--jobs", jobs, "Worker threads for sweep rows")->check(CLI::PositiveNumber);
    sub->add_option("--provenance", provenance, "Bound parameters from x0 only or the whole trajectory")
        ->check(CLI::IsMember({"x0", "trajectory"}));
    sub->add_option("--delta", delta, "delta estimate")->check(CLI::IsMember({"heuristic", "prop4"}));
    sub->add_option("--nu", nu, "nu estimate")->check(CLI::IsMember({"heuristic", "prop7"}));
    sub->add_flag("--baseline-lcss", opts.baseline_lcss, "Also compute the LCSS baseline alpha");
  };
  auto* simulate = app.add_subcommand("simulate", "One closed-loop run for the first horizon pair");
  common(simulate);
  auto* sweep = app.add_subcommand("sweep", "Closed-loop runs and bounds for every horizon pair");
  common(sweep);
  auto* oracle = app.add_subcommand("oracle-check", "Compare solver values with dynamic programming");
  common(oracle);
  auto* report = app.add_subcommand("report", "Re-render plot CSVs from a stored bounds.json");
  report->add_option("--input", opts.input, "bounds.json written by sweep")->required();
  report->add_option("--out", opts.out_dir, "Output directory (defaults to the input's directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hcmpc::kExitConfigError;
  }
  if (jobs > 0) opts.jobs = jobs;
  if (!provenance.empty()) opts.provenance = provenance;
  if (!delta.empty()) opts.delta = delta;
  if (!nu.empty()) opts.nu = nu;

  if (*simulate) return hcmpc::cmd_simulate(opts, std::cout, std::cerr);
  if (*sweep) return hcmpc::cmd_sweep(opts, std::cout, std::cerr);
  if (*oracle) return hcmpc::cmd_oracle_check(opts, std::cout, std::cerr);
  return hcmpc::cmd_report(opts, std::cout, std::cerr);
}
