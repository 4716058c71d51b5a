#pragma once

#include "hcmpc/transcription.hpp"

#include <string>
#include <vector>

namespace hcmpc {

enum class HessianMode {
  /// Cost Hessian through the linearized dynamics; ignores constraint curvature.
  GaussNewton,
  /// Only accepted for affine models, where Gauss-Newton is the exact Hessian.
  ExactForQuadratic,
};

struct SolverOptions {
  double kkt_tolerance = 1e-8;
  int max_outer_iterations = 100;
  double backtracking_factor = 0.5;
  double sufficient_decrease = 1e-4;
  HessianMode hessian_mode = HessianMode::GaussNewton;
  double constraint_violation_tolerance = 1e-8;
  double elastic_penalty = 1e6;
  /// Non-affine models only: once Gauss-Newton takes full steps with a KKT residual
  /// below this threshold, switch to a finite-difference Lagrangian Hessian
  /// (eigenvalues floored to keep it positive definite). Zero disables the switch.
  double newton_polish_threshold = 1e-3;

  void validate() const;
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };

[[nodiscard]] const char* to_string(SolveStatus s);

struct OpenLoopSolution {
  std::vector<Vector> states;   ///< x(0..N)
  std::vector<Vector> inputs;   ///< u(0..N-1)
  std::vector<double> stage_costs;  ///< lambda(n) = l(x(n), u(n))
  double value = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  int iterations = 0;
  bool elastic_used = false;
  bool infeasible_start = false;
  std::string most_violated;
  /// l1 merit value after every outer iteration.
  std::vector<double> merit_history;

  [[nodiscard]] int horizon() const { return static_cast<int>(inputs.size()); }
  [[nodiscard]] bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Sequential quadratic programming on the condensed problem: states are
/// eliminated by forward simulation (which also enforces the initial-state pin
/// and the dynamics exactly), each QP subproblem is solved by the dual
/// active-set method, and steps are globalized with an l1 merit line search.
/// Infeasible subproblems fall back to an elastic relaxation.
[[nodiscard]] OpenLoopSolution solve(const OcpSpec& ocp, const OpenLoopSolution* warm_start = nullptr,
                                     const SolverOptions& opts = {});

/// Receding-horizon shift: drop the first stage, repeat the last input and roll
/// the final state forward.
[[nodiscard]] OpenLoopSolution shift_warm_start(const OpenLoopSolution& sol, const ModelSpec& model);

/// max_n |x(n+1) - f(x(n), u(n))|_inf.
[[nodiscard]] double dynamics_residual(const OpenLoopSolution& sol, const ModelSpec& model);

/// Sum of the recorded stage costs.
[[nodiscard]] double recomputed_value(const OpenLoopSolution& sol);

}  // namespace hcmpc
