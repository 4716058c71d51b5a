#include "hcmpc/closed_loop.hpp"
#include "hcmpc/qp.hpp"

#include <doctest.h>

#include <random>

using namespace hcmpc;

namespace {

std::shared_ptr<const ModelSpec> scalar() { return std::make_shared<const ModelSpec>(make_scalar_test()); }

Vector s(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST_CASE("horizon pair validation") {
  CHECK_NOTHROW((HorizonPair{2, 2}.validate()));
  CHECK_THROWS_AS((HorizonPair{3, 1}.validate()), InvalidArgument);
  CHECK_THROWS_AS((HorizonPair{3, 4}.validate()), InvalidArgument);
  CHECK_THROWS_AS((HorizonPair{3, 3}.validate_explicit()), InvalidArgument);
  CHECK_THROWS_AS((HorizonPair{2, 2}.validate_explicit()), InvalidArgument);
  CHECK_NOTHROW((HorizonPair{4, 2}.validate_explicit()));
}

TEST_CASE("HC layout: N = 16, Nt = 13") {
  const auto m = std::make_shared<const ModelSpec>(make_quadrotor());
  Vector x = Vector::Zero(12);
  x.head<3>() << 1, 2, -1;
  const auto ocp = build_hcmpc(m, {16, 13}, x);
  CHECK(ocp.x1_states() == std::vector<int>{1, 2, 3, 4});
  std::vector<int> rest;
  for (int j = 5; j <= 16; ++j) rest.push_back(j);
  CHECK(ocp.x2_states() == rest);
  CHECK(ocp.inequality_block_count() == 4 * 15);
  CHECK(ocp.input_bound_count() == 2 * 16 * 4);
}

TEST_CASE("UC layout on the scalar model") {
  const auto ocp = build_ucmpc(scalar(), 3, s(0.2));
  CHECK(ocp.x2_states() == std::vector<int>{1, 2, 3});
  CHECK(ocp.x1_states().empty());
  CHECK(ocp.inequality_block_count() == 6);
}

TEST_CASE("HC with Nt = N constrains only the first state by X1") {
  const auto ocp = build_hcmpc(scalar(), {4, 4}, s(0.1));
  CHECK(ocp.x1_states() == std::vector<int>{1});
  CHECK(relax_to_x2(ocp).x1_states().empty());
}

TEST_CASE("infeasible start is flagged") {
  CHECK(build_hcmpc(scalar(), {3, 2}, s(0.6)).infeasible_start);
  CHECK_FALSE(build_hcmpc(scalar(), {3, 2}, s(0.3)).infeasible_start);
}

TEST_CASE("UC N = 2 at x0 = 0.4 matches the analytic optimum") {
  const auto sol = solve(build_ucmpc(scalar(), 2, s(0.4)));
  REQUIRE(sol.optimal());
  CHECK(std::abs(sol.value - 0.18) <= 1e-12);
  CHECK(std::abs(sol.inputs[0](0) + 0.1) <= 1e-12);
  CHECK(dynamics_residual(sol, *scalar()) <= 1e-14);
  CHECK(std::abs(recomputed_value(sol) - sol.value) <= 1e-14);
}

TEST_CASE("x0 = 0 gives the zero solution") {
  const auto sol = solve(build_hcmpc(scalar(), {4, 2}, s(0.0)));
  REQUIRE(sol.optimal());
  CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("warm start from the shifted solution reproduces the cold solution") {
  const auto m = scalar();
  const auto a = solve(build_hcmpc(m, {5, 3}, s(0.4)));
  const auto shifted = shift_warm_start(a, *m);
  const auto warm = solve(build_hcmpc(m, {5, 3}, a.states[1]), &shifted);
  const auto cold = solve(build_hcmpc(m, {5, 3}, a.states[1]));
  REQUIRE(warm.optimal());
  REQUIRE(cold.optimal());
  CHECK(std::abs(warm.value - cold.value) <= 1e-10);
}

TEST_CASE("infeasible problem reports infeasibility") {
  // From x = 1 no admissible input reaches |x| <= 0.4 within one step when |u| <= 0.05.
  const auto m = std::make_shared<const ModelSpec>(make_builtin("scalar_test", {{"input_bound", 0.05}}));
  const auto sol = solve(build_hcmpc(m, {3, 2}, s(1.0)));
  CHECK(sol.status == SolveStatus::Infeasible);
  CHECK(sol.constraint_violation > 0.0);
}

TEST_CASE("solver options validation") {
  SolverOptions o;
  o.kkt_tolerance = -1.0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  SolverOptions p;
  p.hessian_mode = HessianMode::ExactForQuadratic;
  const auto q = std::make_shared<const ModelSpec>(make_quadrotor());
  Vector x = Vector::Zero(12);
  x.head<3>() << 1, 2, -1;
  CHECK_THROWS((void)solve(build_hcmpc(q, {4, 3}, x), nullptr, p));
}

TEST_CASE("property: HC value dominates UC value and UC is monotone in N") {
  const auto m = scalar();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> X(-0.4, 0.4);
  for (int t = 0; t < 30; ++t) {
    const double x = X(rng);
    for (int N = 2; N <= 5; ++N) {
      const auto uc = solve(build_ucmpc(m, N, s(x)));
      const auto uc1 = solve(build_ucmpc(m, N + 1, s(x)));
      REQUIRE(uc.optimal());
      CHECK(uc.value <= uc1.value + 1e-10);
      double prev = 1e300;
      for (int Nt = 2; Nt <= N; ++Nt) {
        const auto hc = solve(build_hcmpc(m, {N, Nt}, s(x)));
        REQUIRE(hc.optimal());
        CHECK(hc.value >= uc.value - 1e-10);
        CHECK(hc.value <= prev + 1e-10);
        prev = hc.value;
      }
    }
  }
}

TEST_CASE("QP: box-constrained least squares") {
  QpProblem qp;
  qp.H = Matrix::Identity(2, 2);
  qp.g = Vector(2);
  qp.g << -2.0, 0.5;
  qp.Aeq = Matrix(0, 2);
  qp.beq = Vector(0);
  qp.Ain = Matrix(4, 2);
  qp.Ain << 1, 0, -1, 0, 0, 1, 0, -1;
  qp.bin = Vector::Constant(4, 1.0);  // |y_i| <= 1
  const auto r = solve_qp(qp);
  REQUIRE(r.status == QpStatus::Optimal);
  CHECK(std::abs(r.x(0) - 1.0) <= 1e-12);
  CHECK(std::abs(r.x(1) + 0.5) <= 1e-12);
}

TEST_CASE("closed loop: scalar run converges and stays in X1") {
  const auto r = run(scalar(), {4, 2}, s(0.4), {});
  CHECK(r.termination == Termination::Converged);
  CHECK(r.max_x1_residual <= 1e-9);
  double sum = 0.0;
  for (const auto& st : r.steps) sum += st.stage_cost;
  CHECK(std::abs(sum - r.J_T) <= 1e-14);
}

TEST_CASE("closed loop: x0 = 0 yields a single record with zero cost") {
  const auto r = run(scalar(), {4, 2}, s(0.0), {});
  CHECK(r.steps.size() == 1);
  CHECK(r.J_T == 0.0);
}

TEST_CASE("truncated cost of a geometric sequence") {
  const auto t = truncated_cost(std::vector<double>{1, 0.5, 0.25, 0.125, 0.0625});
  CHECK(std::abs(t.J_T - 1.9375) <= 1e-12);
  CHECK(std::abs(t.rho - 0.5) <= 1e-12);
  CHECK(std::abs(t.tail - 0.0625) <= 1e-12);
  const auto shortrun = truncated_cost(std::vector<double>{1.0, 0.3});
  CHECK(shortrun.tail == 0.3);
}
