#include "hcmpc/nlp_solver.hpp"

#include "hcmpc/qp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hcmpc {

namespace {

struct StateRow {
  int stage;  // predicted state index j
  const Predicate* pred;
};

// Everything the SQP needs at one input sequence.
struct Evaluation {
  std::vector<Vector> x;
  std::vector<double> lambda;
  double cost = 0.0;
  Vector grad;
  Matrix hess;
  Vector c;      // state constraint values, g <= 0
  Matrix jac;    // d c / d U
  double violation = 0.0;
  double l1 = 0.0;
  int worst = -1;
};

class Condensed {
public:
  explicit Condensed(const OcpSpec& ocp) : ocp_(ocp), m_(*ocp.model) {
    n_ = m_.state_dim;
    nu_ = m_.input_dim;
    N_ = ocp.N;
    for (int j = 1; j <= N_; ++j)
      for (const auto& p : m_.predicates(ocp.stage_sets[j - 1])) rows_.push_back({j, &p});
  }

  [[nodiscard]] int dim() const { return N_ * nu_; }
  [[nodiscard]] const std::vector<StateRow>& rows() const { return rows_; }

  [[nodiscard]] Vector clamp(const Vector& U) const {
    Vector out = U;
    for (int k = 0; k < N_; ++k)
      out.segment(k * nu_, nu_) = out.segment(k * nu_, nu_).cwiseMax(m_.input_lower).cwiseMin(m_.input_upper);
    return out;
  }

  [[nodiscard]] Vector lower() const { return m_.input_lower.replicate(N_, 1); }
  [[nodiscard]] Vector upper() const { return m_.input_upper.replicate(N_, 1); }

  void simulate(const Vector& U, Evaluation& e) const {
    e.x.assign(N_ + 1, Vector());
    e.lambda.assign(N_, 0.0);
    e.x[0] = ocp_.x_k;
    e.cost = 0.0;
    for (int k = 0; k < N_; ++k) {
      const Vector u = U.segment(k * nu_, nu_);
      e.lambda[k] = m_.cost(e.x[k], u);
      e.x[k + 1] = m_.dynamics(e.x[k], u);
    }
    for (double l : e.lambda) e.cost += l;
    e.c.resize(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      e.c(static_cast<Eigen::Index>(i)) = r.pred->value(e.x[r.stage - 1], e.x[r.stage]);
    }
    e.violation = 0.0;
    e.l1 = 0.0;
    e.worst = -1;
    for (Eigen::Index i = 0; i < e.c.size(); ++i) {
      if (e.c(i) > 0.0) e.l1 += e.c(i);
      if (e.c(i) > e.violation) {
        e.violation = e.c(i);
        e.worst = static_cast<int>(i);
      }
    }
  }

  void derivatives(const Vector& U, Evaluation& e) const {
    const int nv = dim();
    std::vector<Matrix> S(N_ + 1, Matrix::Zero(n_, nv));
    Matrix A, B;
    for (int k = 0; k < N_; ++k) {
      linearize(m_, e.x[k], U.segment(k * nu_, nu_), A, B);
      S[k + 1].noalias() = A * S[k];
      S[k + 1].middleCols(k * nu_, nu_) += B;
    }
    const auto& Q = m_.cost.Q;
    const auto& R = m_.cost.R;
    e.grad = Vector::Zero(nv);
    e.hess = Matrix::Zero(nv, nv);
    for (int k = 1; k < N_; ++k) {
      const Matrix QS = Q * S[k];
      e.grad.noalias() += 2.0 * S[k].transpose() * (Q * e.x[k]);
      e.hess.noalias() += 2.0 * S[k].transpose() * QS;
    }
    for (int k = 0; k < N_; ++k) {
      e.grad.segment(k * nu_, nu_) += 2.0 * R * (U.segment(k * nu_, nu_) - m_.cost.u_ref);
      e.hess.block(k * nu_, k * nu_, nu_, nu_) += 2.0 * R;
    }
    e.hess = 0.5 * (e.hess + e.hess.transpose());
    e.jac = Matrix::Zero(static_cast<Eigen::Index>(rows_.size()), nv);
    Vector dp, dx;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      predicate_gradient(*r.pred, e.x[r.stage - 1], e.x[r.stage], dp, dx);
      auto row = e.jac.row(static_cast<Eigen::Index>(i));
      row.noalias() = dx.transpose() * S[r.stage];
      if (r.pred->uses_previous) row.noalias() += dp.transpose() * S[r.stage - 1];
    }
  }

  [[nodiscard]] Vector lagrangian_gradient(const Vector& U, const Vector& z) const {
    Evaluation e;
    simulate(U, e);
    derivatives(U, e);
    return e.grad + e.jac.transpose() * z;
  }

  /// Central differences of the Lagrangian gradient, symmetrized.
  [[nodiscard]] Matrix lagrangian_hessian(const Vector& U, const Vector& z) const {
    const int nv = dim();
    Matrix H(nv, nv);
    for (int i = 0; i < nv; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(U(i)));
      Vector up = U, dn = U;
      up(i) += h;
      dn(i) -= h;
      H.col(i) = (lagrangian_gradient(up, z) - lagrangian_gradient(dn, z)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
  }

private:
  const OcpSpec& ocp_;
  const ModelSpec& m_;
  int n_ = 0, nu_ = 0, N_ = 0;
  std::vector<StateRow> rows_;
};

Vector initial_inputs(const OcpSpec& ocp, const OpenLoopSolution* warm) {
  const auto& m = *ocp.model;
  Vector U(ocp.N * m.input_dim);
  for (int k = 0; k < ocp.N; ++k) {
    Vector u = m.cost.u_ref;
    if (warm && !warm->inputs.empty()) {
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k), warm->inputs.size() - 1);
      if (warm->inputs[idx].size() == m.input_dim) u = warm->inputs[idx];
    }
    U.segment(k * m.input_dim, m.input_dim) = u;
  }
  return U;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(kkt_tolerance > 0.0) || !(constraint_violation_tolerance > 0.0))
    throw InvalidArgument("solver tolerances must be positive");
  if (max_outer_iterations < 1) throw InvalidArgument("max_outer_iterations must be at least 1");
  if (!(backtracking_factor > 0.0 && backtracking_factor < 1.0))
    throw InvalidArgument("backtracking_factor must lie in (0,1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
    throw InvalidArgument("sufficient_decrease must lie in (0,1)");
  if (!(elastic_penalty > 0.0)) throw InvalidArgument("elastic_penalty must be positive");
  if (!(newton_polish_threshold >= 0.0)) throw InvalidArgument("newton_polish_threshold must be nonnegative");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

OpenLoopSolution solve(const OcpSpec& ocp, const OpenLoopSolution* warm_start, const SolverOptions& opts) {
  opts.validate();
  if (!ocp.model) throw InvalidArgument("solve: OCP without model");
  const ModelSpec& model = *ocp.model;
  if (static_cast<int>(ocp.stage_sets.size()) != ocp.N || ocp.x_k.size() != model.state_dim)
    throw InvalidArgument("solve: malformed OCP");
  if (opts.hessian_mode == HessianMode::ExactForQuadratic && !model.affine)
    throw UnsupportedConfiguration("exact Hessian mode needs an affine model");

  Condensed prob(ocp);
  const int nv = prob.dim();
  const Vector lo = prob.lower();
  const Vector hi = prob.upper();
  const int nrows = static_cast<int>(prob.rows().size());

  Vector U = prob.clamp(initial_inputs(ocp, warm_start));
  Evaluation cur;
  prob.simulate(U, cur);
  prob.derivatives(U, cur);

  OpenLoopSolution out;
  out.infeasible_start = ocp.infeasible_start;
  double mu = 10.0;
  bool converged = false;
  bool polish = false;
  Vector zrows = Vector::Zero(nrows);
  int iter = 0;

  for (iter = 1; iter <= opts.max_outer_iterations; ++iter) {
    // Subproblem in the step d.
    std::vector<int> kept;
    for (int i = 0; i < nrows; ++i)
      if (cur.jac.row(i).lpNorm<Eigen::Infinity>() > 0.0) kept.push_back(i);
    const int nk = static_cast<int>(kept.size());
    // Jacobi scaling d = diag(sc) y; single shooting makes the Hessian badly conditioned.
    const Vector sc = cur.hess.diagonal().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
    QpProblem qp;
    qp.H = sc.asDiagonal() * cur.hess * sc.asDiagonal();
    if (polish) {
      const Matrix Hs = sc.asDiagonal() * prob.lagrangian_hessian(U, zrows) * sc.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Matrix> es(Hs);
      const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      const Vector ev = es.eigenvalues().cwiseAbs().cwiseMax(1e-8 * top);
      qp.H = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      qp.H = 0.5 * (qp.H + qp.H.transpose());
    }
    qp.g = sc.cwiseProduct(cur.grad);
    qp.Ain = Matrix::Zero(nk + 2 * nv, nv);
    qp.bin = Vector::Zero(nk + 2 * nv);
    for (int r = 0; r < nk; ++r) {
      qp.Ain.row(r) = cur.jac.row(kept[r]).cwiseProduct(sc.transpose());
      qp.bin(r) = -cur.c(kept[r]);
    }
    qp.Ain.block(nk, 0, nv, nv) = Matrix(sc.asDiagonal());
    qp.bin.segment(nk, nv) = hi - U;
    qp.Ain.block(nk + nv, 0, nv, nv) = -Matrix(sc.asDiagonal());
    qp.bin.segment(nk + nv, nv) = U - lo;

    QpResult sub = solve_qp(qp);
    if (sub.status != QpStatus::Optimal) {
      std::vector<bool> soft(static_cast<std::size_t>(nk + 2 * nv), false);
      for (int r = 0; r < nk; ++r) soft[r] = true;
      sub = solve_qp_elastic(qp, soft, opts.elastic_penalty).qp;
      out.elastic_used = true;
    }
    Vector d = sc.cwiseProduct(sub.x);
    // Box rows must hold exactly; guard against round-off.
    d = (U + d).cwiseMax(lo).cwiseMin(hi) - U;

    double zmax = 0.0;
    for (int r = 0; r < nk; ++r) zmax = std::max(zmax, sub.z(r));
    mu = std::max(mu, 2.0 * zmax);

    // Linearized l1 model decrease.
    double lin_l1 = 0.0;
    for (int i = 0; i < nrows; ++i) lin_l1 += std::max(0.0, cur.c(i) + cur.jac.row(i).dot(d));
    const double D = cur.grad.dot(d) + mu * (lin_l1 - cur.l1);
    const double phi0 = cur.cost + mu * cur.l1;

    Evaluation next;
    double t = 1.0;
    Vector Unew = U + d;
    prob.simulate(Unew, next);
    // Below roundoff the merit cannot certify decrease; take the full step.
    const bool roundoff = std::abs(D) <= 1e-13 * std::max(1.0, std::abs(phi0));
    if (!model.affine && !roundoff) {
      while (next.cost + mu * next.l1 > phi0 + opts.sufficient_decrease * t * std::min(D, 0.0) && t > 1e-12) {
        t *= opts.backtracking_factor;
        Unew = U + t * d;
        prob.simulate(Unew, next);
      }
    }
    prob.derivatives(Unew, next);
    out.merit_history.push_back(next.cost + mu * next.l1);

    // KKT residual at the new point with the subproblem multipliers.
    Vector stat = next.grad;
    double comp = 0.0;
    for (int r = 0; r < nk; ++r) {
      const double z = sub.z(r);
      stat += z * next.jac.row(kept[r]).transpose();
      comp = std::max(comp, std::abs(z * next.c(kept[r])));
    }
    for (int i = 0; i < nv; ++i) {
      const double zu = sub.z(nk + i);
      const double zl = sub.z(nk + nv + i);
      stat(i) += zu - zl;
      comp = std::max(comp, std::abs(zu * (Unew(i) - hi(i))));
      comp = std::max(comp, std::abs(zl * (lo(i) - Unew(i))));
    }
    // Stationarity in the scaled variables, relative to the scaled gradient.
    const double scale = std::max(1.0, sc.cwiseProduct(next.grad).lpNorm<Eigen::Infinity>());
    const double kkt = std::max(sc.cwiseProduct(stat).lpNorm<Eigen::Infinity>() / scale, comp / std::max(1.0, std::abs(cur.cost)));

    zrows.setZero();
    for (int r = 0; r < nk; ++r) zrows(kept[r]) = sub.z(r);
    if (!model.affine && opts.newton_polish_threshold > 0.0)
      polish = t == 1.0 && !out.elastic_used && kkt < opts.newton_polish_threshold;

    const double step_norm = (t * d).lpNorm<Eigen::Infinity>();
    U = Unew;
    cur = std::move(next);
    out.kkt_residual = kkt;

    if (kkt <= opts.kkt_tolerance && cur.violation <= opts.constraint_violation_tolerance) {
      converged = true;
      break;
    }
    if (step_norm <= 1e-15 * std::max(1.0, U.lpNorm<Eigen::Infinity>()) && t < 1.0) break;
  }

  out.iterations = std::min(iter, opts.max_outer_iterations);
  out.states = cur.x;
  out.inputs.resize(ocp.N);
  for (int k = 0; k < ocp.N; ++k) out.inputs[k] = U.segment(k * model.input_dim, model.input_dim);
  out.stage_costs = cur.lambda;
  out.value = recomputed_value(out);
  out.constraint_violation = cur.violation;
  if (cur.worst >= 0) {
    const auto& r = prob.rows()[cur.worst];
    out.most_violated = r.pred->name + "@" + std::to_string(r.stage);
  }
  if (cur.violation > opts.constraint_violation_tolerance)
    out.status = SolveStatus::Infeasible;
  else
    out.status = converged ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return out;
}

OpenLoopSolution shift_warm_start(const OpenLoopSolution& sol, const ModelSpec& model) {
  OpenLoopSolution out;
  if (sol.inputs.empty()) return out;
  const int N = sol.horizon();
  out.inputs.assign(sol.inputs.begin() + 1, sol.inputs.end());
  out.inputs.push_back(sol.inputs.back());
  out.states.assign(sol.states.begin() + 1, sol.states.end());
  out.states.push_back(model.dynamics(out.states.back(), out.inputs.back()));
  out.stage_costs.resize(N);
  for (int k = 0; k < N; ++k) out.stage_costs[k] = model.cost(out.states[k], out.inputs[k]);
  out.value = recomputed_value(out);
  out.status = sol.status;
  return out;
}

double dynamics_residual(const OpenLoopSolution& sol, const ModelSpec& model) {
  double r = 0.0;
  for (std::size_t k = 0; k < sol.inputs.size(); ++k)
    r = std::max(r, (sol.states[k + 1] - model.dynamics(sol.states[k], sol.inputs[k])).lpNorm<Eigen::Infinity>());
  return r;
}

double recomputed_value(const OpenLoopSolution& sol) {
  double v = 0.0;
  for (double l : sol.stage_costs) v += l;
  return v;
}

}  // namespace hcmpc
