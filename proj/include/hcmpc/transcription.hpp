#pragma once

#include "hcmpc/models.hpp"

#include <memory>
#include <vector>

namespace hcmpc {

struct HorizonPair {
  int N = 2;
  int Ntilde = 2;

  /// 2 <= Ntilde <= N.
  void validate() const;
  /// Additionally N >= 3 and Ntilde <= N - 1, as the explicit bounds need.
  void validate_explicit() const;
  [[nodiscard]] int gap() const { return N - Ntilde; }
  bool operator==(const HorizonPair&) const = default;
};

enum class ProblemKind { HC, UC };

/// Finite-dimensional transcription of one open-loop problem.
///
/// Decision variables are u(0..N-1) and x(0..N); x(0) is pinned to x_k and
/// x(n+1) = f(x(n), u(n)). `stage_sets[j-1]` names the set imposed on the
/// predicted state x(j), j = 1..N. The objective is sum_{n<N} l(x(n), u(n)).
struct OcpSpec {
  std::shared_ptr<const ModelSpec> model;
  ProblemKind kind = ProblemKind::HC;
  int N = 1;
  /// Constraint horizon; 0 for UC problems.
  int Ntilde = 0;
  Vector x_k;
  std::vector<ConstraintSet> stage_sets;
  /// x_k violates X1 (HC only). The problem is still handed to the solver.
  bool infeasible_start = false;

  /// Predicted-state indices (1-based) carrying X1 / X2.
  [[nodiscard]] std::vector<int> x1_states() const;
  [[nodiscard]] std::vector<int> x2_states() const;
  /// Number of scalar state inequalities (state, predicate) pairs.
  [[nodiscard]] int inequality_block_count() const;
  /// Number of input-box inequalities (two per input coordinate and stage).
  [[nodiscard]] int input_bound_count() const { return 2 * N * model->input_dim; }
};

[[nodiscard]] OcpSpec build_hcmpc(std::shared_ptr<const ModelSpec> model, const HorizonPair& horizons,
                                  const Vector& x_k);
[[nodiscard]] OcpSpec build_ucmpc(std::shared_ptr<const ModelSpec> model, int N, const Vector& x_k);

/// Same layout with every X1 stage replaced by X2.
[[nodiscard]] OcpSpec relax_to_x2(const OcpSpec& ocp);

}  // namespace hcmpc
