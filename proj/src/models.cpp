#include "hcmpc/models.hpp"

#include "hcmpc/qp.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <sstream>
#include <utility>

namespace hcmpc {

namespace {

void check_state(const ModelSpec& m, const Vector& x, const char* what) {
  if (x.size() != m.state_dim) {
    std::ostringstream os;
    os << what << ": expected state of dimension " << m.state_dim << ", got " << x.size();
    throw InvalidArgument(os.str());
  }
}

void check_input(const ModelSpec& m, const Vector& u, const char* what) {
  if (u.size() != m.input_dim) {
    std::ostringstream os;
    os << what << ": expected input of dimension " << m.input_dim << ", got " << u.size();
    throw InvalidArgument(os.str());
  }
}

bool is_diagonal(const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      if (i != j && M(i, j) != 0.0) return false;
  return true;
}

double membership_value(const Predicate& p, const Vector& x) {
  if (p.membership) return p.membership(x);
  return p.value(x, x);
}

Predicate linear_predicate(std::string name, Vector a, double b) {
  // a'x + b <= 0
  Predicate p;
  p.name = std::move(name);
  p.value = [a, b](const Vector&, const Vector& x) { return a.dot(x) + b; };
  p.gradient = [a](const Vector& prev, const Vector&, Vector& dp, Vector& dx) {
    dp = Vector::Zero(prev.size());
    dx = a;
  };
  return p;
}

// (1 - gamma) h(prev) - h(x) <= 0 with affine h(x) = c'x + c0.
Predicate barrier_predicate(std::string name, Vector c, double c0, double gamma) {
  Predicate p;
  p.name = std::move(name);
  p.uses_previous = true;
  p.value = [c, c0, gamma](const Vector& prev, const Vector& x) {
    return (1.0 - gamma) * (c.dot(prev) + c0) - (c.dot(x) + c0);
  };
  p.gradient = [c, gamma](const Vector&, const Vector&, Vector& dp, Vector& dx) {
    dp = (1.0 - gamma) * c;
    dx = -c;
  };
  p.membership = [c, c0](const Vector& x) { return -(c.dot(x) + c0); };
  return p;
}

template <typename T, typename VecX, typename VecU>
Eigen::Matrix<T, 12, 1> quad_field(const QuadrotorParams& p, const VecX& s, const VecU& in) {
  const T phi = s(3), theta = s(4), psi = s(5);
  const T u = s(6), v = s(7), w = s(8);
  const T pr = s(9), q = s(10), r = s(11);
  const T ft = in(0), tx = in(1), ty = in(2), tz = in(3);
  Eigen::Matrix<T, 12, 1> f;
  f(0) = w * (phi * psi + theta) - v * (psi - phi * theta) + u;
  f(1) = v * (1.0 + phi * psi * theta) - w * (phi - psi * theta) + u * psi;
  f(2) = w - u * theta + v * phi;
  f(3) = pr + r * theta + q * phi * theta;
  f(4) = q - r * phi;
  f(5) = r + q * phi;
  f(6) = r * v - q * w - p.gravity * theta;
  f(7) = pr * w - r * u + p.gravity * phi;
  f(8) = q * u - pr * v + p.gravity - ft / p.mass;
  f(9) = (p.iyy - p.izz) / p.ixx * r * q + tx / p.ixx;
  f(10) = (p.izz - p.ixx) / p.iyy * pr * r + ty / p.iyy;
  f(11) = (p.ixx - p.iyy) / p.izz * pr * q + tz / p.izz;
  return f;
}

void apply(const Overrides& ov, std::string_view model, std::vector<std::pair<std::string, double*>> doubles,
           std::vector<std::pair<std::string, int*>> ints = {}, std::vector<std::pair<std::string, bool*>> bools = {}) {
  for (const auto& [key, value] : ov) {
    bool found = false;
    for (auto& [name, ptr] : doubles)
      if (name == key) {
        *ptr = value;
        found = true;
      }
    for (auto& [name, ptr] : ints)
      if (name == key) {
        if (value != std::floor(value)) throw InvalidArgument("override '" + key + "' must be an integer");
        *ptr = static_cast<int>(value);
        found = true;
      }
    for (auto& [name, ptr] : bools)
      if (name == key) {
        *ptr = value != 0.0;
        found = true;
      }
    if (!found) throw InvalidArgument("unknown parameter '" + key + "' for model " + std::string(model));
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (state_dim <= 0 || input_dim <= 0) throw InvalidArgument(name + ": dimensions must be positive");
  if (!dynamics) throw InvalidArgument(name + ": missing dynamics");
  if (cost.Q.rows() != state_dim || cost.Q.cols() != state_dim)
    throw InvalidArgument(name + ": Q has wrong size");
  if (cost.R.rows() != input_dim || cost.R.cols() != input_dim)
    throw InvalidArgument(name + ": R has wrong size");
  if (cost.u_ref.size() != input_dim) throw InvalidArgument(name + ": u_ref has wrong size");
  if (input_lower.size() != input_dim || input_upper.size() != input_dim)
    throw InvalidArgument(name + ": input box has wrong size");
  if ((input_lower.array() > input_upper.array()).any()) throw InvalidArgument(name + ": empty input box");
  if ((cost.u_ref.array() < input_lower.array()).any() || (cost.u_ref.array() > input_upper.array()).any())
    throw InvalidArgument(name + ": equilibrium input outside the input box");
  if (!cost.Q.isApprox(cost.Q.transpose()) || !cost.R.isApprox(cost.R.transpose()))
    throw InvalidArgument(name + ": cost weights must be symmetric");
  Eigen::LLT<Matrix> q_llt(cost.Q), r_llt(cost.R);
  if (q_llt.info() != Eigen::Success || r_llt.info() != Eigen::Success)
    throw InvalidArgument(name + ": cost weights must be positive definite");
  if (!(sample_time > 0.0)) throw InvalidArgument(name + ": sample time must be positive");
  for (const auto* set : {&x1, &x2})
    for (const auto& p : *set)
      if (!p.value) throw InvalidArgument(name + ": predicate '" + p.name + "' has no value map");
}

Vector step(const ModelSpec& model, const Vector& x, const Vector& u) {
  check_state(model, x, "step");
  check_input(model, u, "step");
  return model.dynamics(x, u);
}

double stage_cost(const ModelSpec& model, const Vector& x, const Vector& u) {
  check_state(model, x, "stage_cost");
  check_input(model, u, "stage_cost");
  return model.cost(x, u);
}

Vector constraint_residuals(const ModelSpec& model, const Vector& x, ConstraintSet which) {
  check_state(model, x, "constraint_residuals");
  const auto& preds = model.predicates(which);
  Vector r(static_cast<Eigen::Index>(preds.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) r(static_cast<Eigen::Index>(i)) = membership_value(preds[i], x);
  return r;
}

Vector constraint_residuals(const ModelSpec& model, const Vector& prev, const Vector& x, ConstraintSet which) {
  check_state(model, prev, "constraint_residuals");
  check_state(model, x, "constraint_residuals");
  const auto& preds = model.predicates(which);
  Vector r(static_cast<Eigen::Index>(preds.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) r(static_cast<Eigen::Index>(i)) = preds[i].value(prev, x);
  return r;
}

bool in_set(const ModelSpec& model, const Vector& x, ConstraintSet which, double tol) {
  const Vector r = constraint_residuals(model, x, which);
  return r.size() == 0 || r.maxCoeff() <= tol;
}

double cost_extrema_over_inputs(const ModelSpec& model, const Vector& x, Extremum mode) {
  check_state(model, x, "cost_extrema_over_inputs");
  const auto& c = model.cost;
  const double sx = c.state_part(x);
  const int m = model.input_dim;
  const Vector lo = model.input_lower - c.u_ref;
  const Vector hi = model.input_upper - c.u_ref;

  if (mode == Extremum::Max) {
    if (m <= 8) {
      double best = 0.0;
      Vector du(m);
      for (unsigned mask = 0; mask < (1u << m); ++mask) {
        for (int i = 0; i < m; ++i) du(i) = (mask >> i & 1u) ? hi(i) : lo(i);
        best = std::max(best, du.dot(c.R * du));
      }
      return sx + best;
    }
    if (!is_diagonal(c.R))
      throw UnsupportedConfiguration("cost maximum over inputs needs input_dim <= 8 or a diagonal R");
    double best = 0.0;
    for (int i = 0; i < m; ++i) best += c.R(i, i) * std::max(lo(i) * lo(i), hi(i) * hi(i));
    return sx + best;
  }

  if ((lo.array() <= 0.0).all() && (hi.array() >= 0.0).all()) return sx;
  if (is_diagonal(c.R)) {
    const Vector du = Vector::Zero(m).cwiseMax(lo).cwiseMin(hi);
    return sx + du.dot(c.R * du);
  }
  QpProblem qp;
  qp.H = 2.0 * c.R;
  qp.g = Vector::Zero(m);
  qp.Ain = Matrix(2 * m, m);
  qp.Ain << Matrix::Identity(m, m), -Matrix::Identity(m, m);
  qp.bin = Vector(2 * m);
  qp.bin << hi, -lo;
  const QpResult r = solve_qp(qp);
  return sx + r.x.dot(c.R * r.x);
}

void linearize(const ModelSpec& model, const Vector& x, const Vector& u, Matrix& A, Matrix& B) {
  check_state(model, x, "linearize");
  check_input(model, u, "linearize");
  if (model.jacobian) {
    model.jacobian(x, u, A, B);
    return;
  }
  const int n = model.state_dim, m = model.input_dim;
  A.resize(n, n);
  B.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    A.col(i) = (model.dynamics(xp, u) - model.dynamics(xm, u)) / (2.0 * h);
  }
  for (int i = 0; i < m; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(u(i)));
    Vector up = u, um = u;
    up(i) += h;
    um(i) -= h;
    B.col(i) = (model.dynamics(x, up) - model.dynamics(x, um)) / (2.0 * h);
  }
}

void predicate_gradient(const Predicate& p, const Vector& prev, const Vector& x, Vector& d_prev, Vector& d_x) {
  if (p.gradient) {
    p.gradient(prev, x, d_prev, d_x);
    return;
  }
  const auto n = x.size();
  d_prev = Vector::Zero(n);
  d_x = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    d_x(i) = (p.value(prev, xp) - p.value(prev, xm)) / (2.0 * h);
    if (p.uses_previous) {
      const double hp = 1e-6 * std::max(1.0, std::abs(prev(i)));
      Vector pp = prev, pm = prev;
      pp(i) += hp;
      pm(i) -= hp;
      d_prev(i) = (p.value(pp, x) - p.value(pm, x)) / (2.0 * hp);
    }
  }
}

ModelSpec make_scalar_test(const ScalarTestParams& p) {
  ModelSpec m;
  m.name = "scalar_test";
  m.state_dim = 1;
  m.input_dim = 1;
  m.affine = true;
  const double a = p.a, b = p.b;
  m.dynamics = [a, b](const Vector& x, const Vector& u) {
    Vector y(1);
    y(0) = a * x(0) + b * u(0);
    return y;
  };
  m.jacobian = [a, b](const Vector&, const Vector&, Matrix& A, Matrix& B) {
    A = Matrix::Constant(1, 1, a);
    B = Matrix::Constant(1, 1, b);
  };
  m.cost.Q = Matrix::Constant(1, 1, p.q);
  m.cost.R = Matrix::Constant(1, 1, p.r);
  m.cost.u_ref = Vector::Zero(1);
  m.input_lower = Vector::Constant(1, -p.input_bound);
  m.input_upper = Vector::Constant(1, p.input_bound);
  m.x1.push_back(linear_predicate("x_upper", Vector::Ones(1), -p.x1_bound));
  m.x1.push_back(linear_predicate("x_lower", -Vector::Ones(1), -p.x1_bound));
  if (p.x2_bound > 0.0) {
    m.x2.push_back(linear_predicate("x_upper", Vector::Ones(1), -p.x2_bound));
    m.x2.push_back(linear_predicate("x_lower", -Vector::Ones(1), -p.x2_bound));
  }
  m.sample_time = 1.0;
  m.validate();
  return m;
}

ModelSpec make_double_integrator(const DoubleIntegratorParams& p) {
  if (p.axes != 1 && p.axes != 2) throw InvalidArgument("double_integrator: axes must be 1 or 2");
  const int k = p.axes;
  const int n = 2 * k;
  const double h = p.sample_time;
  Matrix A = Matrix::Identity(n, n);
  A.topRightCorner(k, k) = h * Matrix::Identity(k, k);
  Matrix B = Matrix::Zero(n, k);
  B.topRows(k) = 0.5 * h * h * Matrix::Identity(k, k);
  B.bottomRows(k) = h * Matrix::Identity(k, k);

  ModelSpec m;
  m.name = "double_integrator";
  m.state_dim = n;
  m.input_dim = k;
  m.sample_time = h;
  m.affine = true;
  m.dynamics = [A, B](const Vector& x, const Vector& u) -> Vector { return A * x + B * u; };
  m.jacobian = [A, B](const Vector&, const Vector&, Matrix& Ao, Matrix& Bo) {
    Ao = A;
    Bo = B;
  };
  m.cost.Q = p.q * Matrix::Identity(n, n);
  m.cost.R = p.r * Matrix::Identity(k, k);
  m.cost.u_ref = Vector::Zero(k);
  m.input_lower = Vector::Constant(k, -p.input_bound);
  m.input_upper = Vector::Constant(k, p.input_bound);

  if (k == 2) {
    if (p.barriers) {
      Vector c1(4), c2(4);
      c1 << 5.0 / 9.0, 1.0, 0.0, 0.0;
      c2 << 1.0, -1.0, 0.0, 0.0;
      m.x1.push_back(barrier_predicate("cbf_h1", c1, 0.5 / 9.0, p.gamma));
      m.x1.push_back(barrier_predicate("cbf_h2", c2, 1.6, p.gamma));
      m.safety_metrics = [c1, c2](const Vector& x) {
        return std::map<std::string, double>{{"h1", c1.dot(x) + 0.5 / 9.0}, {"h2", c2.dot(x) + 1.6}};
      };
    }
    const double signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    const char* names[4] = {"speed_pp", "speed_pm", "speed_mp", "speed_mm"};
    for (int i = 0; i < 4; ++i) {
      Vector a = Vector::Zero(4);
      a(2) = signs[i][0];
      a(3) = signs[i][1];
      m.x1.push_back(linear_predicate(names[i], a, -p.speed_bound));
    }
  } else {
    Vector a = Vector::Zero(2);
    a(1) = 1.0;
    m.x1.push_back(linear_predicate("speed_upper", a, -p.speed_bound));
    m.x1.push_back(linear_predicate("speed_lower", -a, -p.speed_bound));
  }
  m.validate();
  return m;
}

Vector quadrotor_vector_field(const QuadrotorParams& p, const Vector& x, const Vector& u) {
  if (x.size() != 12 || u.size() != 4) throw InvalidArgument("quadrotor: expected 12 states and 4 inputs");
  return quad_field<double>(p, x, u);
}

ModelSpec make_quadrotor(const QuadrotorParams& p) {
  ModelSpec m;
  m.name = "quadrotor6dof";
  m.state_dim = 12;
  m.input_dim = 4;
  m.sample_time = p.sample_time;
  const double h = p.sample_time;

  // Forward Euler: x+ = x + h f(x, u).
  m.dynamics = [p, h](const Vector& x, const Vector& u) -> Vector {
    return x + h * quad_field<double>(p, x, u);
  };
  m.jacobian = [p, h](const Vector& x, const Vector& u, Matrix& A, Matrix& B) {
    using Deriv = Eigen::Matrix<double, 16, 1>;
    using AD = Eigen::AutoDiffScalar<Deriv>;
    Eigen::Matrix<AD, 12, 1> xs;
    Eigen::Matrix<AD, 4, 1> us;
    for (int i = 0; i < 12; ++i) xs(i) = AD(x(i), 16, i);
    for (int i = 0; i < 4; ++i) us(i) = AD(u(i), 16, 12 + i);
    const auto f = quad_field<AD>(p, xs, us);
    A = Matrix::Identity(12, 12);
    B = Matrix::Zero(12, 4);
    for (int i = 0; i < 12; ++i) {
      A.row(i) += h * f(i).derivatives().head<12>().transpose();
      B.row(i) = h * f(i).derivatives().tail<4>().transpose();
    }
  };

  Vector qd(12);
  qd << Vector::Constant(3, p.q_position), Vector::Constant(9, p.q_other);
  m.cost.Q = qd.asDiagonal();
  m.cost.R = p.r_input * Matrix::Identity(4, 4);
  m.cost.u_ref = Vector::Zero(4);
  m.cost.u_ref(0) = p.mass * p.gravity;
  m.input_lower = Vector(4);
  m.input_upper = Vector(4);
  m.input_lower << -p.thrust_max, -p.torque_max, -p.torque_max, -p.torque_max;
  m.input_upper << p.thrust_max, p.torque_max, p.torque_max, p.torque_max;

  Vector obs(3);
  obs << p.obstacle_x, p.obstacle_y, p.obstacle_z;
  const double rad = p.r_obs * p.r_obs + p.epsilon;
  Predicate dist;
  dist.name = "obstacle_distance";
  dist.value = [obs, rad](const Vector&, const Vector& x) { return rad - (x.head<3>() - obs).squaredNorm(); };
  dist.gradient = [obs](const Vector& prev, const Vector& x, Vector& dp, Vector& dx) {
    dp = Vector::Zero(prev.size());
    dx = Vector::Zero(x.size());
    dx.head<3>() = -2.0 * (x.head<3>() - obs);
  };
  m.x1.push_back(dist);
  m.safety_metrics = [obs](const Vector& x) {
    return std::map<std::string, double>{{"obstacle_distance", (x.head<3>() - obs).norm()}, {"altitude", -x(2)}};
  };

  Vector ez = Vector::Zero(12);
  ez(2) = 1.0;
  m.x1.push_back(linear_predicate("ground", ez, 0.0));

  const char* att[3] = {"phi", "theta", "psi"};
  for (int i = 0; i < 3; ++i) {
    Vector a = Vector::Zero(12);
    a(3 + i) = 1.0;
    m.x1.push_back(linear_predicate(std::string(att[i]) + "_upper", a, -p.attitude_bound));
    m.x1.push_back(linear_predicate(std::string(att[i]) + "_lower", -a, -p.attitude_bound));
  }

  const double vmax2 = p.speed_bound * p.speed_bound;
  Predicate speed;
  speed.name = "speed";
  speed.value = [vmax2](const Vector&, const Vector& x) { return x.segment<3>(6).squaredNorm() - vmax2; };
  speed.gradient = [](const Vector& prev, const Vector& x, Vector& dp, Vector& dx) {
    dp = Vector::Zero(prev.size());
    dx = Vector::Zero(x.size());
    dx.segment<3>(6) = 2.0 * x.segment<3>(6);
  };
  m.x1.push_back(speed);

  const char* rates[3] = {"p", "q", "r"};
  for (int i = 0; i < 3; ++i) {
    Vector a = Vector::Zero(12);
    a(9 + i) = 1.0;
    m.x1.push_back(linear_predicate(std::string(rates[i]) + "_upper", a, -p.rate_bound));
    m.x1.push_back(linear_predicate(std::string(rates[i]) + "_lower", -a, -p.rate_bound));
  }
  m.validate();
  return m;
}

ModelSpec make_builtin(std::string_view id, const Overrides& ov) {
  if (id == "scalar_test") {
    ScalarTestParams p;
    apply(ov, id,
                            {{"a", &p.a},
                             {"b", &p.b},
                             {"q", &p.q},
                             {"r", &p.r},
                             {"input_bound", &p.input_bound},
                             {"x1_bound", &p.x1_bound},
                             {"x2_bound", &p.x2_bound}});
    return make_scalar_test(p);
  }
  if (id == "double_integrator") {
    DoubleIntegratorParams p;
    apply(ov, id,
                                  {{"sample_time", &p.sample_time},
                                   {"q", &p.q},
                                   {"r", &p.r},
                                   {"input_bound", &p.input_bound},
                                   {"gamma", &p.gamma},
                                   {"speed_bound", &p.speed_bound}},
                                  {{"axes", &p.axes}}, {{"barriers", &p.barriers}});
    return make_double_integrator(p);
  }
  if (id == "quadrotor6dof") {
    QuadrotorParams p;
    apply(ov, id,
                           {{"mass", &p.mass},
                            {"gravity", &p.gravity},
                            {"ixx", &p.ixx},
                            {"iyy", &p.iyy},
                            {"izz", &p.izz},
                            {"thrust_max", &p.thrust_max},
                            {"torque_max", &p.torque_max},
                            {"sample_time", &p.sample_time},
                            {"q_position", &p.q_position},
                            {"q_other", &p.q_other},
                            {"r_input", &p.r_input},
                            {"obstacle_x", &p.obstacle_x},
                            {"obstacle_y", &p.obstacle_y},
                            {"obstacle_z", &p.obstacle_z},
                            {"r_obs", &p.r_obs},
                            {"epsilon", &p.epsilon},
                            {"attitude_bound", &p.attitude_bound},
                            {"speed_bound", &p.speed_bound},
                            {"rate_bound", &p.rate_bound}});
    return make_quadrotor(p);
  }
  throw InvalidArgument("unknown builtin model '" + std::string(id) + "'");
}

}  // namespace hcmpc
