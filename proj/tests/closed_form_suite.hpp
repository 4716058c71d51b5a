#pragma once

// Exact worked examples and randomized properties of the closed-form bounds.
// Shared by the unit tests and the acceptance binary.

#include "hcmpc/suboptimality.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace hcmpc::suite {

struct Result {
  int checks = 0;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, const std::string& what, double tol = 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": got " << got << ", want " << want;
    expect(std::abs(got - want) <= tol, os.str());
  }
};

inline DecayEstimate rates(std::optional<double> s1, std::optional<double> s2, std::optional<double> s3 = {},
                           std::optional<double> s4 = {}) {
  DecayEstimate e;
  e.sigma1 = s1;
  e.sigma2 = s2;
  e.sigma3 = s3;
  e.sigma4 = s4;
  return e;
}

inline Vector scalar_state(double v) { return Vector::Constant(1, v); }

/// Every exact worked example, to 1e-12.
inline void worked_examples(Result& r) {
  const auto scalar = make_scalar_test();
  r.near(step(scalar, scalar_state(0.4), scalar_state(-0.1))(0), 0.1, "scalar step");
  r.near(stage_cost(scalar, scalar_state(0.4), scalar_state(0.0)), 0.16, "scalar stage cost");
  {
    const QuadraticCost c{Matrix::Identity(2, 2), Matrix::Identity(1, 1), Vector::Zero(1)};
    Vector x(2);
    x << 1, 0;
    r.near(c(x, scalar_state(0.5)), 1.25, "identity quadratic cost");
  }
  r.near(constraint_residuals(scalar, scalar_state(0.5), ConstraintSet::X1).maxCoeff(), 0.1, "scalar X1 residual");
  {
    const auto q = make_quadrotor();
    Vector x = Vector::Zero(12);
    x.head<3>() << 1.1, 1.5, -0.2;
    r.near(constraint_residuals(q, x, ConstraintSet::X1)(0), -0.14, "distance residual at obstacle + (0.7,0,0)");
    x.head<3>() << 1, 2, -1;
    r.near(0.35 - constraint_residuals(q, x, ConstraintSet::X1)(0), 1.25, "squared distance at the initial state");
    r.expect(q.x1.size() == 15, "quadrotor X1 predicate count");
  }
  {
    ModelSpec m;
    m.name = "box";
    m.state_dim = 2;
    m.input_dim = 2;
    m.dynamics = [](const Vector& x, const Vector&) { return x; };
    m.cost = {Matrix::Identity(2, 2), Matrix::Identity(2, 2), Vector::Zero(2)};
    m.input_lower = Vector::Constant(2, -1.0);
    m.input_upper = Vector::Constant(2, 1.0);
    Vector x(2);
    x << 0.5, 0.5;
    r.near(cost_extrema_over_inputs(m, x, Extremum::Min), 0.5, "cost min over box");
    r.near(cost_extrema_over_inputs(m, x, Extremum::Max), 2.5, "cost max over box");
  }
  {
    auto m = std::make_shared<const ModelSpec>(scalar);
    Vector x = Vector::Zero(12);
    x.head<3>() << 1, 2, -1;
    const auto ocp = build_hcmpc(std::make_shared<const ModelSpec>(make_quadrotor()), {16, 13}, x);
    r.expect(ocp.x1_states().size() == 4 && ocp.x1_states().back() == 4 && ocp.x2_states().front() == 5 &&
                 ocp.x2_states().back() == 16,
             "N=16, Nt=13 layout");
    const auto uc = build_ucmpc(m, 3, scalar_state(0.2));
    r.expect(uc.x2_states() == std::vector<int>{1, 2, 3}, "UC N=3 layout");
    const auto sol = solve(build_ucmpc(m, 2, scalar_state(0.4)));
    r.near(sol.value, 0.18, "UC N=2 value at 0.4");
    r.near(sol.inputs[0](0), -0.1, "UC N=2 first input at 0.4");
  }
  {
    const auto t = truncated_cost(std::vector<double>{1, 0.5, 0.25, 0.125, 0.0625});
    r.near(t.J_T, 1.9375, "truncated J_T");
    r.near(t.rho, 0.5, "truncated rate");
    r.near(t.tail, 0.0625, "truncated tail");
  }
  {
    OpenLoopSolution s;
    s.stage_costs = {1, 0.5, 0.25, 0.125};
    r.near(tail_value(s, {4, 2}), 0.125, "tail value");
  }
  r.near(alpha_online(0.0, 0.3, 0.1, 1.0), 0.8, "online alpha");
  r.near(alpha_online(0.0, 0.3, 0.1, 0.1), -1.0, "online alpha, negative");
  {
    const auto e = estimate_sigmas(std::vector<double>{1, 0.5, 0.25, 0.05, 0.01}, {5, 3}, RateMode::MaxRates);
    r.near(*e.sigma1, 0.5, "sigma1");
    r.near(*e.sigma2, std::max(std::sqrt(0.2), std::cbrt(0.04)), "sigma2");
    r.near(*e.sigma2, 0.4472135954999579, "sigma2 value");
  }
  r.near(alpha_explicit({4, 2}, rates(0.5, 0.25), 0.0), 0.984375, "alpha explicit, delta 0");
  r.near(alpha_explicit({4, 2}, rates(0.5, 0.25), 0.5), 0.9453125, "alpha explicit, delta 0.5");
  r.near(delta_prop4(0.5, 1.0, 0.5, 2), 2.0 / 3.0, "delta prop4");
  {
    auto e = rates(0.5, 0.5);
    e.C1 = 2.0;
    r.expect(stability_horizon_gap(e, 0.5) == 2, "stability gap log2 4");
    auto f = rates(0.9, 0.5);
    f.C1 = 2.0;
    r.expect(stability_horizon_gap(f, 0.0) == 7, "stability gap sigma1 0.9");
    r.expect(stability_horizon_gap(rates(0.5, 0.25), 0.0) == 0, "stability gap trivial");
  }
  r.near(cl_upper_bound({4, 2}, rates(0.5, 0.25), 0.5, 1.0), 3.625, "upper bound");
  {
    // alpha = 1: the bound equals the truncated series sum_n C1 sigma1^n + tail.
    const auto e = rates(0.5, 0.25);
    double series = 0.0;
    for (int n = 0; n <= 2; ++n) series += std::pow(0.5, n);
    series += std::pow(0.5, 2) * 0.25;
    r.near(cl_upper_bound({4, 2}, e, 1.0, 1.0), series, "upper bound at alpha 1");
  }
  r.near(omega_online(1.0, 0.15, 0.1), 0.05, "online omega");
  {
    const auto e = rates({}, {}, 0.4, 0.1);
    r.near(omega_explicit({4, 2}, e, 0.2, 1.0), 0.00512, "omega explicit");
    r.near(cl_lower_bound({4, 2}, e, 0.0, 1.0, 1.0), 1.576, "lower bound");
  }
  {
    Vector u0 = scalar_state(0.0);
    r.near(kappa_estimate(scalar, scalar_state(1.0), u0), 0.25, "kappa");
  }
  r.near(nu_prop7(0.5, 0.2, 1.0, 0.5, 2).value_or(-1.0), 1.1 * 2.0 / 3.0, "nu prop7");
  {
    auto e = rates(0.5, 0.3, 0.4, 0.2);
    e.C3 = 2.0;
    r.expect(omega_horizon_gap(e, 1.0, 0.5, 0.2) == 4, "omega gap");
    r.expect(omega_horizon_gap(e, 0.0, 0.5, 0.2) == 0, "omega gap kappa 0");
  }
  {
    const auto s = sandwich_interval(100.0, 0.5, 0.2);
    r.expect(s.interval.has_value(), "sandwich applicable");
    if (s.interval) {
      r.near(s.interval->lower, 125.0, "sandwich lower");
      r.near(s.interval->upper, 200.0, "sandwich upper");
    }
  }
  {
    BoundReport a, b;
    a.horizons = {10, 3};
    b.horizons = {10, 5};
    a.interval_online = Interval{0.0, 100.0 / 0.5};
    b.interval_online = Interval{190.0 / 0.9, 1e9};
    r.expect(compare_horizons(a, b).verdict == Verdict::SecondWorse, "horizon comparison");
  }
  r.near(alpha_lcss(1.0, {5, 3}), 0.5, "alpha lcss beta 1");
  r.near(alpha_lcss(2.0, {5, 4}), -3.0, "alpha lcss beta 2");
}

/// Randomized properties over `tuples` valid parameter sets.
inline void random_properties(Result& r, int tuples, unsigned seed = 20241018u) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < tuples; ++t) {
    const double s1 = 0.05 + 0.9 * U(rng);
    const double s2 = s1 * (0.02 + 0.97 * U(rng));
    const double s3 = s1 * (0.02 + 0.97 * U(rng));
    const double s4 = std::min(s2, s3) * (0.02 + 0.97 * U(rng));
    auto e = rates(s1, s2, s3, s4);
    e.C1 = 1.0 + U(rng);
    e.C2 = 1.0 + U(rng);
    e.C3 = 0.5 + 1.5 * U(rng);
    e.C4 = 0.5 + 1.5 * U(rng);
    const double delta = 3.0 * U(rng);
    const double nu = delta * U(rng);
    const double kappa = 0.01 + 2.0 * U(rng);
    const int Nt = 2 + static_cast<int>(U(rng) * 20);
    const int N = Nt + 1 + static_cast<int>(U(rng) * 20);
    std::ostringstream tag;
    tag.precision(17);
    tag << "tuple " << t << " (s=" << s1 << "," << s2 << "," << s3 << "," << s4 << " delta=" << delta
        << " nu=" << nu << " kappa=" << kappa << " N=" << N << " Nt=" << Nt << ")";

    const double a = alpha_explicit({N, Nt}, e, delta);
    const double a1 = alpha_explicit({N + 1, Nt}, e, delta);
    r.expect(a1 >= a - 1e-14, "alpha_explicit not monotone in N, " + tag.str());
    const double w = omega_explicit({N, Nt}, e, nu, kappa);
    const double w1 = omega_explicit({N + 1, Nt}, e, nu, kappa);
    r.expect(w1 <= w + 1e-14, "omega_explicit not monotone in N, " + tag.str());

    const int g = stability_horizon_gap(e, delta);
    const int Ns = std::max(N, Nt + std::max(1, g - 1));
    r.expect(alpha_explicit({Ns, Nt}, e, delta) >= -1e-12, "stability gap does not give alpha >= 0, " + tag.str());

    const int g2 = omega_horizon_gap(e, kappa, delta, nu);
    const int No = std::max(N, Nt + std::max(1, g2));
    const double ao = alpha_explicit({No, Nt}, e, delta);
    const double wo = omega_explicit({No, Nt}, e, nu, kappa);
    r.expect(wo >= 0.0 && wo <= 1.0 - ao + 1e-12, "omega gap does not give 0 <= omega <= 1 - alpha, " + tag.str());
  }
}

}  // namespace hcmpc::suite
