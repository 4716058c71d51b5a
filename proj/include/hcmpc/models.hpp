#pragma once

#include "hcmpc/types.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hcmpc {

enum class ConstraintSet { X1, X2 };

/// l(x,u) = x'Qx + (u - u_ref)'R(u - u_ref).
///
/// u_ref is the equilibrium input (zero for the linear models, hover thrust for
/// the quadrotor), so l(0, u_ref) = 0 plays the role of l(0, 0) = 0.
struct QuadraticCost {
  Matrix Q;
  Matrix R;
  Vector u_ref;

  [[nodiscard]] double state_part(const Vector& x) const { return x.dot(Q * x); }
  [[nodiscard]] double input_part(const Vector& u) const {
    const Vector du = u - u_ref;
    return du.dot(R * du);
  }
  [[nodiscard]] double operator()(const Vector& x, const Vector& u) const {
    return state_part(x) + input_part(u);
  }
};

/// Scalar constraint g <= 0 on a predicted state.
///
/// Predicates with `uses_previous` are stage-coupled: inside a horizon they are
/// evaluated as g(x_{j}, x_{j+1}), which is how discrete barrier conditions
/// h(x_{j+1}) >= (1 - gamma) h(x_j) are written. `membership` is the single-state
/// form used to test whether a measured state lies in the set.
struct Predicate {
  std::string name;
  bool uses_previous = false;
  std::function<double(const Vector& prev, const Vector& x)> value;
  /// Optional analytic gradient. Central differences are used when empty.
  std::function<void(const Vector& prev, const Vector& x, Vector& d_prev, Vector& d_x)> gradient;
  /// Optional for state-only predicates (defaults to value(x, x)).
  std::function<double(const Vector& x)> membership;
};

struct ModelSpec {
  std::string name;
  int state_dim = 0;
  int input_dim = 0;
  std::function<Vector(const Vector& x, const Vector& u)> dynamics;
  /// Optional; fills A = df/dx and B = df/du. Central differences when empty.
  std::function<void(const Vector& x, const Vector& u, Matrix& A, Matrix& B)> jacobian;
  QuadraticCost cost;
  Vector input_lower;
  Vector input_upper;
  std::vector<Predicate> x1;
  /// Empty means X2 is the whole space.
  std::vector<Predicate> x2;
  double sample_time = 1.0;
  /// Dynamics and every predicate are affine, so one SQP step is exact.
  bool affine = false;
  /// Optional named safety quantities of a measured state, reported by the artifacts.
  std::function<std::map<std::string, double>(const Vector& x)> safety_metrics;

  /// Throws InvalidArgument when dimensions or the cost/input-box invariants fail.
  void validate() const;

  [[nodiscard]] const std::vector<Predicate>& predicates(ConstraintSet which) const {
    return which == ConstraintSet::X1 ? x1 : x2;
  }
};

[[nodiscard]] Vector step(const ModelSpec& model, const Vector& x, const Vector& u);
[[nodiscard]] double stage_cost(const ModelSpec& model, const Vector& x, const Vector& u);

/// Membership residuals g(x) of every predicate in the selected set; x is in the
/// set iff every entry is <= 0. Stage-coupled predicates use their membership form.
[[nodiscard]] Vector constraint_residuals(const ModelSpec& model, const Vector& x, ConstraintSet which);

/// Stage residuals for a predicted state x reached from prev (coupled predicates
/// use the pair, the others ignore prev).
[[nodiscard]] Vector constraint_residuals(const ModelSpec& model, const Vector& prev, const Vector& x,
                                          ConstraintSet which);

[[nodiscard]] bool in_set(const ModelSpec& model, const Vector& x, ConstraintSet which, double tol = 0.0);

enum class Extremum { Max, Min };

/// max or min over the input box of l(x, .).
[[nodiscard]] double cost_extrema_over_inputs(const ModelSpec& model, const Vector& x, Extremum mode);

/// A = df/dx, B = df/du at (x, u).
void linearize(const ModelSpec& model, const Vector& x, const Vector& u, Matrix& A, Matrix& B);

/// Gradients of a predicate's stage form.
void predicate_gradient(const Predicate& p, const Vector& prev, const Vector& x, Vector& d_prev, Vector& d_x);

/// Key-value parameter overrides for builtin models.
using Overrides = std::map<std::string, double>;

struct ScalarTestParams {
  double a = 0.5;
  double b = 1.0;
  double q = 1.0;
  double r = 1.0;
  double input_bound = 1.0;
  double x1_bound = 0.4;
  /// Non-positive means X2 is the whole real line.
  double x2_bound = 1.0;
};

struct DoubleIntegratorParams {
  int axes = 2;
  double sample_time = 0.2;
  double q = 1.0;
  double r = 1.0;
  double input_bound = 2.0;
  double gamma = 0.8;
  double speed_bound = 2.0;
  bool barriers = true;
};

struct QuadrotorParams {
  double mass = 1.0;
  double gravity = 9.81;
  double ixx = 0.01;
  double iyy = 0.01;
  double izz = 0.02;
  double thrust_max = 15.0;
  double torque_max = 1.0;
  double sample_time = 0.4;
  double q_position = 10.0;
  double q_other = 1.0;
  double r_input = 0.1;
  double obstacle_x = 0.4;
  double obstacle_y = 1.5;
  double obstacle_z = -0.2;
  double r_obs = 0.5;
  double epsilon = 0.1;
  double attitude_bound = 3.14159265358979323846 / 9.0;
  double speed_bound = 2.0;
  double rate_bound = 3.14159265358979323846 / 18.0;
};

[[nodiscard]] ModelSpec make_scalar_test(const ScalarTestParams& p = {});
[[nodiscard]] ModelSpec make_double_integrator(const DoubleIntegratorParams& p = {});
[[nodiscard]] ModelSpec make_quadrotor(const QuadrotorParams& p = {});

/// Builds "scalar_test", "double_integrator" or "quadrotor6dof" with overrides
/// named after the parameter struct fields. Unknown identifiers or keys throw.
[[nodiscard]] ModelSpec make_builtin(std::string_view id, const Overrides& overrides = {});

/// Continuous-time quadrotor vector field (small-angle model); exposed for tests.
[[nodiscard]] Vector quadrotor_vector_field(const QuadrotorParams& p, const Vector& x, const Vector& u);

}  // namespace hcmpc
