#pragma once

#include "hcmpc/nlp_solver.hpp"

#include <memory>
#include <vector>

namespace hcmpc {

struct StepRecord {
  Vector x;
  Vector u;  ///< applied input, u*(0|x_k)
  double stage_cost = 0.0;
  OpenLoopSolution solution;
};

enum class Termination { HorizonReached, Converged, SolverFailure };

[[nodiscard]] const char* to_string(Termination t);

struct ClosedLoopOptions {
  /// Maximum number of recorded steps after the first (records k = 0..T).
  int max_steps = 200;
  double convergence_epsilon = 1e-8;
  int tail_patience = 3;
  SolverOptions solver;
};

struct ClosedLoopRun {
  std::shared_ptr<const ModelSpec> model;
  HorizonPair horizons;
  std::vector<StepRecord> steps;
  double J_T = 0.0;
  double tail_estimate = 0.0;
  Termination termination = Termination::HorizonReached;
  /// Largest X1 membership residual over the recorded states (<= 0 means safe).
  double max_x1_residual = 0.0;
  /// Index of the failing step when termination == SolverFailure.
  int failed_step = -1;
};

/// Receding-horizon simulation with the HC-MPC feedback u = u*(0|x_k).
[[nodiscard]] ClosedLoopRun run(std::shared_ptr<const ModelSpec> model, const HorizonPair& horizons, const Vector& x0,
                                const ClosedLoopOptions& opts = {});

struct TruncatedCost {
  double J_T = 0.0;
  double tail = 0.0;
  double rho = 0.0;
};

/// J_T is the sum of the given stage costs. The tail is lambda_last * rho / (1 - rho),
/// with rho a log-linear fit over the last five costs clamped to [0, 0.999];
/// fewer than five costs give the conservative tail lambda_last.
[[nodiscard]] TruncatedCost truncated_cost(const std::vector<double>& stage_costs);
[[nodiscard]] TruncatedCost truncated_cost(const ClosedLoopRun& run);

}  // namespace hcmpc
