#include "hcmpc/models.hpp"

#include <doctest.h>

#include <random>

using namespace hcmpc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ModelSpec two_input_unit_model() {
  ModelSpec m;
  m.name = "unit";
  m.state_dim = 2;
  m.input_dim = 2;
  m.dynamics = [](const Vector& x, const Vector&) { return x; };
  m.cost.Q = Matrix::Identity(2, 2);
  m.cost.R = Matrix::Identity(2, 2);
  m.cost.u_ref = Vector::Zero(2);
  m.input_lower = Vector::Constant(2, -1.0);
  m.input_upper = Vector::Constant(2, 1.0);
  return m;
}

}  // namespace

TEST_CASE("scalar step and stage cost") {
  const auto m = make_scalar_test();
  CHECK(step(m, vec({0.4}), vec({-0.1}))(0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(stage_cost(m, vec({0.4}), vec({0.0})) == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(stage_cost(m, vec({0.0}), vec({0.0})) == 0.0);
}

TEST_CASE("quadratic cost with identity weights") {
  QuadraticCost c{Matrix::Identity(2, 2), Matrix::Identity(1, 1), Vector::Zero(1)};
  CHECK(std::abs(c(vec({1, 0}), vec({0.5})) - 1.25) <= 1e-12);
}

TEST_CASE("dimension mismatch is rejected") {
  const auto m = make_scalar_test();
  CHECK_THROWS_AS((void)step(m, vec({0.1, 0.2}), vec({0.0})), InvalidArgument);
  CHECK_THROWS_AS((void)stage_cost(m, vec({0.1}), vec({0.0, 1.0})), InvalidArgument);
}

TEST_CASE("scalar X1 residuals") {
  const auto m = make_scalar_test();
  const Vector r = constraint_residuals(m, vec({0.5}), ConstraintSet::X1);
  CHECK(std::abs(r.maxCoeff() - 0.1) <= 1e-12);
  CHECK_FALSE(in_set(m, vec({0.5}), ConstraintSet::X1));
  CHECK(in_set(m, vec({0.4}), ConstraintSet::X1));
  CHECK(in_set(m, vec({0.9}), ConstraintSet::X2));
}

TEST_CASE("quadrotor distance predicate") {
  const auto m = make_quadrotor();
  REQUIRE(m.x1.front().name == "obstacle_distance");
  Vector x = Vector::Zero(12);
  x.head<3>() = vec({0.4 + 0.7, 1.5, -0.2});
  CHECK(std::abs(constraint_residuals(m, x, ConstraintSet::X1)(0) - (-0.14)) <= 1e-12);

  Vector init = Vector::Zero(12);
  init.head<3>() = vec({1, 2, -1});
  // 0.35 - |(0.6, 0.5, -0.8)|^2 = 0.35 - 1.25
  CHECK(std::abs(constraint_residuals(m, init, ConstraintSet::X1)(0) - (0.35 - 1.25)) <= 1e-12);
  CHECK(in_set(m, init, ConstraintSet::X1));
}

TEST_CASE("quadrotor X1 has fifteen scalar predicates and X2 is unconstrained") {
  const auto m = make_quadrotor();
  CHECK(m.x1.size() == 15);
  CHECK(m.x2.empty());
}

TEST_CASE("quadrotor with r_obs = 0 keeps only the epsilon margin") {
  const auto m = make_builtin("quadrotor6dof", {{"r_obs", 0.0}});
  Vector x = Vector::Zero(12);
  x.head<3>() = vec({0.4, 1.5 + 0.3, -0.2});
  CHECK(std::abs(constraint_residuals(m, x, ConstraintSet::X1)(0) - (0.1 - 0.09)) <= 1e-12);
}

TEST_CASE("double integrator barrier values at the initial state") {
  const auto m = make_double_integrator();
  const Vector x0 = vec({-0.8, 0.6, -0.45, 0.65});
  const auto s = m.safety_metrics(x0);
  CHECK(std::abs(s.at("h1") - ((5.0 / 9.0) * -0.8 + 0.6 + 0.5 / 9.0)) <= 1e-12);
  CHECK(std::abs(s.at("h1") - 0.21111111111111111) <= 1e-12);
  CHECK(std::abs(s.at("h2") - 0.2) <= 1e-12);
  CHECK(in_set(m, x0, ConstraintSet::X1));
}

TEST_CASE("barrier with gamma = 0 is a monotone condition") {
  const auto m = make_builtin("double_integrator", {{"gamma", 0.0}});
  const Vector prev = vec({-0.8, 0.6, 0.0, 0.0});
  Vector next = prev;
  const Vector r_same = constraint_residuals(m, prev, next, ConstraintSet::X1);
  CHECK(std::abs(r_same(0)) <= 1e-12);
  CHECK(std::abs(r_same(1)) <= 1e-12);
  next(1) += 0.01;  // raises h1, lowers h2
  const Vector r = constraint_residuals(m, prev, next, ConstraintSet::X1);
  CHECK(r(0) < 0.0);
  CHECK(r(1) > 0.0);
}

TEST_CASE("cost extrema over the input box") {
  auto m = two_input_unit_model();
  const Vector x = vec({0.5, 0.5});
  CHECK(std::abs(cost_extrema_over_inputs(m, x, Extremum::Min) - 0.5) <= 1e-12);
  CHECK(std::abs(cost_extrema_over_inputs(m, x, Extremum::Max) - 2.5) <= 1e-12);
  CHECK(cost_extrema_over_inputs(m, Vector::Zero(2), Extremum::Min) == 0.0);
}

TEST_CASE("unknown overrides and model ids throw") {
  CHECK_THROWS_AS((void)make_builtin("scalar_test", {{"bogus", 1.0}}), InvalidArgument);
  CHECK_THROWS_AS((void)make_builtin("nope"), InvalidArgument);
}

TEST_CASE("property: stage cost is nonnegative and vanishes only at the equilibrium") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (const char* id : {"scalar_test", "double_integrator", "quadrotor6dof"}) {
    const auto m = make_builtin(id);
    for (int t = 0; t < 200; ++t) {
      Vector x(m.state_dim), u(m.input_dim);
      for (auto& v : x) v = U(rng);
      for (auto& v : u) v = U(rng);
      CHECK(stage_cost(m, x, u) > 0.0);
    }
    CHECK(stage_cost(m, Vector::Zero(m.state_dim), m.cost.u_ref) == 0.0);
  }
}

TEST_CASE("property: scalar X1 is control invariant") {
  const auto m = make_scalar_test();
  for (int i = 0; i < 100; ++i) {
    const double x = -0.4 + 0.8 * i / 99.0;
    bool found = false;
    for (int j = 0; j <= 200 && !found; ++j) {
      const double u = -1.0 + 2.0 * j / 200.0;
      found = in_set(m, step(m, vec({x}), vec({u})), ConstraintSet::X1);
    }
    CHECK(found);
  }
}

TEST_CASE("quadrotor hover is an equilibrium and the Jacobian matches finite differences") {
  const auto m = make_quadrotor();
  const Vector x = Vector::Zero(12);
  CHECK(step(m, x, m.cost.u_ref).norm() <= 1e-12);
  Vector xs = Vector::Zero(12);
  for (int i = 0; i < 12; ++i) xs(i) = 0.05 * (i + 1) * (i % 2 ? -1 : 1);
  Vector us = m.cost.u_ref + vec({0.3, 0.01, -0.02, 0.03});
  Matrix A, B;
  linearize(m, xs, us, A, B);
  for (int j = 0; j < 12; ++j) {
    Vector e = Vector::Zero(12);
    e(j) = 1e-6;
    const Vector fd = (m.dynamics(xs + e, us) - m.dynamics(xs - e, us)) / 2e-6;
    CHECK((A.col(j) - fd).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
  for (int j = 0; j < 4; ++j) {
    Vector e = Vector::Zero(4);
    e(j) = 1e-6;
    const Vector fd = (m.dynamics(xs, us + e) - m.dynamics(xs, us - e)) / 2e-6;
    CHECK((B.col(j) - fd).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}
