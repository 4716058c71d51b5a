#pragma once

#include "hcmpc/transcription.hpp"

#include <memory>
#include <vector>

namespace hcmpc {

enum class Interpolation { Nearest, Multilinear };

/// Tensor grids over the state and input boxes.
struct GridSpec {
  Vector state_lower, state_upper;
  std::vector<int> state_nodes;
  Vector input_lower, input_upper;
  std::vector<int> input_nodes;
  Interpolation interpolation = Interpolation::Multilinear;

  void validate(const ModelSpec& model) const;
  /// 401 state nodes per axis on [-1,1] in 1-D (101 in 2-D), 201 input nodes over the input box.
  [[nodiscard]] static GridSpec defaults_for(const ModelSpec& model);
  [[nodiscard]] double state_spacing() const;
};

enum class OracleProblem { HC, UC };

/// Backward dynamic-programming tables. W[j] is the optimal cost-to-go from the
/// predicted state x(j) (j = 0..N, W[N] = 0), with x(j+1..N) constrained by the
/// same stage sets as the transcription. Infeasible or out-of-grid points are +inf.
struct DpTables {
  std::shared_ptr<const ModelSpec> model;
  GridSpec grid;
  int N = 0;
  std::vector<ConstraintSet> stage_sets;
  std::vector<std::vector<double>> W;

  [[nodiscard]] std::size_t node_count() const;
  [[nodiscard]] Vector node(std::size_t idx) const;
  /// Interpolated W[j](x); +inf outside the grid.
  [[nodiscard]] double interpolate(int j, const Vector& x) const;
  /// V(x0) = min over the input grid of l(x0,u) + W[1](f(x0,u)), evaluated at x0 itself.
  [[nodiscard]] double value_at(const Vector& x0) const;
  /// Minimizer of the same first-stage problem.
  [[nodiscard]] Vector policy(const Vector& x0) const;

private:
  [[nodiscard]] std::pair<double, Vector> first_stage(int j, const Vector& x) const;
};

/// state_dim <= 2 and input_dim <= 1; stage-coupled predicates are not supported.
[[nodiscard]] DpTables dp_value(std::shared_ptr<const ModelSpec> model, int N, int Ntilde, OracleProblem problem,
                                const GridSpec& grid);

/// Closed-loop cost sum_{t<T} l(x_t, u_t) of the DP receding-horizon policy.
[[nodiscard]] double dp_closed_loop(std::shared_ptr<const ModelSpec> model, const HorizonPair& horizons,
                                    const Vector& x0, int T, const GridSpec& grid);

}  // namespace hcmpc
