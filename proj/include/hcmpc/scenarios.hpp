#pragma once

#include "hcmpc/analysis.hpp"
#include "hcmpc/oracle.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hcmpc {

/// Settings for the solver-vs-oracle suite.
struct OracleSettings {
  int state_nodes = 401;
  int input_nodes = 201;
  Interpolation interpolation = Interpolation::Multilinear;
  double state_range = 1.0;  ///< grid covers [-range, range] per state axis
  int samples = 20;
  double sample_range = 0.4;  ///< initial states evenly spaced on [-sample_range, sample_range]
  int max_N = 6;
  double tolerance = 1e-3;
};

struct ScenarioConfig {
  std::string name;
  std::string model_id;
  Overrides overrides;
  std::vector<HorizonPair> pairs;
  Vector x0;
  ClosedLoopOptions closed_loop;
  /// `analysis.solver` is kept equal to `closed_loop.solver` by run_row.
  AnalysisOptions analysis;
  OracleSettings oracle;
  int jobs = 1;

  /// Non-empty valid pairs, x0 of the model's dimension and inside X1.
  void validate() const;
  [[nodiscard]] std::shared_ptr<const ModelSpec> model() const;
};

/// Every valid pair (N, Nt) with 2 <= Nt <= N.
[[nodiscard]] std::vector<HorizonPair> all_pairs(int N);

[[nodiscard]] ScenarioConfig scalar_scenario(const Overrides& overrides = {});
[[nodiscard]] ScenarioConfig double_integrator_scenario(const Overrides& overrides = {});
[[nodiscard]] ScenarioConfig quadrotor_scenario(const Overrides& overrides = {});
/// Preset by name: "scalar_test", "double_integrator" or "quadrotor".
[[nodiscard]] ScenarioConfig scenario_preset(const std::string& name, const Overrides& overrides = {});

struct SweepRow {
  HorizonPair horizons;
  bool ok = false;
  std::string error;
  ClosedLoopRun run;
  TruncatedCost cost;
  std::vector<StepAnalysis> steps;
  BoundReport report;
};

/// Closed-loop run plus bounds for one pair. Exceptions are caught into `error`.
[[nodiscard]] SweepRow run_row(const ScenarioConfig& config, const HorizonPair& pair);

/// One row per configured pair, in configuration order, computed on up to `jobs`
/// threads. Failed rows are marked and never abort the sweep.
[[nodiscard]] std::vector<SweepRow> sweep(const ScenarioConfig& config, int jobs = 1);

struct OracleCheckEntry {
  std::string check;  ///< "value", "lemma3" or "lemma7"
  std::string problem;
  double x0 = 0.0;
  double computed = 0.0;
  double reference = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct OracleCheckReport {
  std::vector<OracleCheckEntry> entries;
  bool pass = true;
  /// Index of the entry with the largest error/tolerance ratio (-1 when empty).
  int worst = -1;
};

/// Solver-vs-oracle values (UC for N = 1..max_N, HC for every valid pair), the tail
/// identity against an oracle solve from x_s, and the sign of V_Nt^Nt - V_{Nt-1},
/// at `oracle.samples` initial states. Scalar models only.
[[nodiscard]] OracleCheckReport oracle_check(const ScenarioConfig& config);

}  // namespace hcmpc
