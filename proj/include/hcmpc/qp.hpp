#pragma once

#include "hcmpc/types.hpp"

#include <vector>

namespace hcmpc {

/// min 0.5 x'Hx + g'x  s.t.  Aeq x = beq,  Ain x <= bin.
///
/// H must be symmetric positive definite.
struct QpProblem {
  Matrix H;
  Vector g;
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Vector x;
  /// Multipliers: Hx + g + Aeq'y + Ain'z = 0 with z >= 0.
  Vector y;
  Vector z;
  double objective = 0.0;
  int iterations = 0;
  std::vector<int> active;
};

/// Dual active-set method of Goldfarb and Idnani.
[[nodiscard]] QpResult solve_qp(const QpProblem& qp, int max_iterations = 10000);

/// Elastic relaxation: rows flagged in `soft` get a slack s >= 0 penalized by
/// `penalty * sum(s) + 0.5 * reg * |s|^2`. Returns the primal part and the slacks.
struct ElasticResult {
  QpResult qp;
  Vector slack;
};
[[nodiscard]] ElasticResult solve_qp_elastic(const QpProblem& qp, const std::vector<bool>& soft,
                                             double penalty = 1e6, double reg = 1e-6);

}  // namespace hcmpc
