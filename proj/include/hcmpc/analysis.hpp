#pragma once

#include "hcmpc/suboptimality.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hcmpc {

struct AnalysisOptions {
  Provenance provenance = Provenance::X0Only;
  DeltaMethod delta_method = DeltaMethod::Heuristic;
  NuMethod nu_method = NuMethod::Heuristic;
  bool baseline_lcss = false;
  /// Also solve V_{Nt-1}(x_s) directly to compare with the recorded tail.
  bool check_tail = false;
  /// Steps whose lambda0 falls below this fraction of the first one are skipped.
  double negligible_lambda = 1e-12;
  SolverOptions solver;
};

/// Auxiliary solves and per-step estimates for the transition x_k -> x_{k+1}.
struct StepAnalysis {
  int k = 0;
  double lambda0 = 0.0;
  double V_k = 0.0;
  double V_k1 = 0.0;
  Vector x_s;  ///< x*(N-Nt+1 | x_k)
  Vector x_p;  ///< x*(N-Nt | x_{k+1})
  double V_NtNt_xs = 0.0;
  double tail = 0.0;  ///< equals V_{Nt-1}(x_s) at a global optimum
  std::optional<double> V_Ntm1_xs_direct;
  double V_NtNt_xp = 0.0;  ///< sum_{n=N-Nt}^{N-1} lambda(n | x_{k+1})
  double V_Ntm1_xp = 0.0;
  std::optional<double> alpha_online, omega_online;
  DecayEstimate max_rates;  ///< from the solve at x_k
  DecayEstimate min_rates;  ///< from the solve at x_{k+1}
  std::optional<double> kappa;
  std::optional<double> delta_prop4;
  std::optional<double> nu_prop7;
  std::optional<double> beta;
  bool skipped = false;
  bool aux_solves_ok = true;
  std::vector<std::string> notes;
};

/// Requires records k and k+1.
[[nodiscard]] StepAnalysis analyze_step(const ClosedLoopRun& run, int k, const AnalysisOptions& opts);

/// Step analyses for k = 0 (X0Only) or every recorded transition (FullTrajectory).
[[nodiscard]] std::vector<StepAnalysis> analyze_run(const ClosedLoopRun& run, const AnalysisOptions& opts);

/// Bounds from precomputed step analyses; X0Only uses the k = 0 entry only.
[[nodiscard]] BoundReport aggregate_bounds(const ClosedLoopRun& run, const AnalysisOptions& opts,
                                           const std::vector<StepAnalysis>& steps);

/// All bounds for the run's initial state, with parameters taken from step 0
/// (X0Only) or aggregated conservatively over every analysed step (FullTrajectory).
[[nodiscard]] BoundReport bound_report(const ClosedLoopRun& run, const AnalysisOptions& opts,
                                       std::vector<StepAnalysis>* steps_out = nullptr);

}  // namespace hcmpc
