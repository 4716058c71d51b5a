#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace hcmpc {

/// Stable process exit codes.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfigError = 2, kExitSolverFailure = 3 };

struct CommandOptions {
  std::string config_path;
  std::string out_dir;  ///< overrides output.dir; "hcmpc_out" when both are empty
  std::string input;    ///< bounds.json for `report`
  std::optional<int> jobs;
  std::optional<std::string> provenance;  ///< "x0" or "trajectory"
  std::optional<std::string> delta;       ///< "heuristic" or "prop4"
  std::optional<std::string> nu;          ///< "heuristic" or "prop7"
  bool baseline_lcss = false;
};

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_oracle_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Re-renders plot CSVs from a stored bounds.json.
int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace hcmpc
