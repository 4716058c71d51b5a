#include "hcmpc/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hcmpc {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::HorizonReached: return "horizon_reached";
    case Termination::Converged: return "converged";
    case Termination::SolverFailure: return "solver_failure";
  }
  return "unknown";
}

ClosedLoopRun run(std::shared_ptr<const ModelSpec> model, const HorizonPair& horizons, const Vector& x0,
                  const ClosedLoopOptions& opts) {
  if (!model) throw InvalidArgument("run: null model");
  horizons.validate();
  if (opts.max_steps < 0 || opts.tail_patience < 1 || !(opts.convergence_epsilon > 0.0))
    throw InvalidArgument("run: invalid closed-loop options");

  ClosedLoopRun out;
  out.model = model;
  out.horizons = horizons;
  out.max_x1_residual = -std::numeric_limits<double>::infinity();

  const double l_ref = model->cost(x0, model->cost.u_ref);
  const double threshold = opts.convergence_epsilon * l_ref;
  Vector x = x0;
  OpenLoopSolution warm;
  bool have_warm = false;
  int small = 0;

  for (int k = 0; k <= opts.max_steps; ++k) {
    const Vector r = constraint_residuals(*model, x, ConstraintSet::X1);
    if (r.size() > 0) out.max_x1_residual = std::max(out.max_x1_residual, r.maxCoeff());

    const OcpSpec ocp = build_hcmpc(model, horizons, x);
    StepRecord rec;
    rec.x = x;
    rec.solution = solve(ocp, have_warm ? &warm : nullptr, opts.solver);
    if (rec.solution.status != SolveStatus::Optimal) {
      out.termination = Termination::SolverFailure;
      out.failed_step = k;
      break;
    }
    rec.u = rec.solution.inputs.front();
    rec.stage_cost = model->cost(x, rec.u);
    const Vector next = model->dynamics(x, rec.u);
    warm = shift_warm_start(rec.solution, *model);
    have_warm = true;
    out.steps.push_back(std::move(rec));

    if (l_ref == 0.0) {
      out.termination = Termination::Converged;
      break;
    }
    small = out.steps.back().stage_cost <= threshold ? small + 1 : 0;
    if (small >= opts.tail_patience) {
      out.termination = Termination::Converged;
      break;
    }
    x = next;
  }
  if (out.steps.empty()) out.max_x1_residual = 0.0;

  const auto tc = truncated_cost(out);
  out.J_T = tc.J_T;
  out.tail_estimate = tc.tail;
  return out;
}

TruncatedCost truncated_cost(const std::vector<double>& costs) {
  TruncatedCost tc;
  for (double c : costs) tc.J_T += c;
  if (costs.empty()) return tc;
  const double last = costs.back();
  if (costs.size() < 5) {
    tc.tail = last;
    return tc;
  }
  const std::size_t n0 = costs.size() - 5;
  bool positive = true;
  for (std::size_t i = n0; i < costs.size(); ++i) positive = positive && costs[i] > 0.0;
  if (!positive) {
    // Zeros end the geometric model; the tail is whatever the last cost says.
    tc.rho = 0.0;
    tc.tail = 0.0;
    return tc;
  }
  // Least-squares slope of log(cost) against the index.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 5; ++i) {
    const double y = std::log(costs[n0 + i]);
    sx += i;
    sy += y;
    sxx += i * i;
    sxy += i * y;
  }
  const double slope = (5 * sxy - sx * sy) / (5 * sxx - sx * sx);
  tc.rho = std::clamp(std::exp(slope), 0.0, 0.999);
  tc.tail = last * tc.rho / (1.0 - tc.rho);
  return tc;
}

TruncatedCost truncated_cost(const ClosedLoopRun& run) {
  std::vector<double> costs;
  costs.reserve(run.steps.size());
  for (const auto& s : run.steps) costs.push_back(s.stage_cost);
  return truncated_cost(costs);
}

}  // namespace hcmpc
