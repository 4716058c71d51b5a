#include "hcmpc/qp.hpp"

#include <cmath>
#include <limits>

namespace hcmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Working state of the dual method. Constraints are stored as n_i'x + b_i >= 0
// (equalities as n_i'x + b_i = 0), matching the classic formulation.
struct Dual {
  int n;
  Matrix J;
  Matrix R;
  double r_norm = 1.0;

  void compute_d(Vector& d, const Vector& np) const { d.noalias() = J.transpose() * np; }

  void update_z(Vector& z, const Vector& d, int iq) const {
    z.noalias() = J.rightCols(n - iq) * d.tail(n - iq);
  }

  void update_r(Vector& r, const Vector& d, int iq) const {
    for (int i = iq - 1; i >= 0; --i) {
      double sum = 0.0;
      for (int j = i + 1; j < iq; ++j) sum += R(i, j) * r(j);
      r(i) = (d(i) - sum) / R(i, i);
    }
  }

  bool add_constraint(Vector& d, int& iq) {
    for (int j = n - 1; j >= iq + 1; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1);
        const double t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    ++iq;
    for (int i = 0; i < iq; ++i) R(i, iq - 1) = d(i);
    if (std::abs(d(iq - 1)) <= kEps * r_norm) return false;
    r_norm = std::max(r_norm, std::abs(d(iq - 1)));
    return true;
  }

  void delete_constraint(std::vector<int>& A, Vector& u, int p, int& iq, int l) {
    int qq = -1;
    for (int i = p; i < iq; ++i) {
      if (A[i] == l) {
        qq = i;
        break;
      }
    }
    if (qq < 0) return;
    for (int i = qq; i < iq - 1; ++i) {
      A[i] = A[i + 1];
      u(i) = u(i + 1);
      for (int j = 0; j < n; ++j) R(j, i) = R(j, i + 1);
    }
    A[iq - 1] = A[iq];
    u(iq - 1) = u(iq);
    A[iq] = 0;
    u(iq) = 0.0;
    for (int j = 0; j < iq; ++j) R(j, iq - 1) = 0.0;
    --iq;
    if (iq == 0) return;
    for (int j = qq; j < iq; ++j) {
      double cc = R(j, j);
      double ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j);
        const double t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (J(k, j) + t1) - t2;
      }
    }
  }
};

void check_dims(const QpProblem& qp) {
  const auto n = qp.H.rows();
  if (qp.H.cols() != n || qp.g.size() != n) throw InvalidArgument("qp: Hessian/gradient size mismatch");
  if (qp.Aeq.rows() > 0 && (qp.Aeq.cols() != n || qp.beq.size() != qp.Aeq.rows()))
    throw InvalidArgument("qp: equality block size mismatch");
  if (qp.Ain.rows() > 0 && (qp.Ain.cols() != n || qp.bin.size() != qp.Ain.rows()))
    throw InvalidArgument("qp: inequality block size mismatch");
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, int max_iterations) {
  check_dims(qp);
  const int n = static_cast<int>(qp.H.rows());
  const int p = static_cast<int>(qp.Aeq.rows());
  const int m = static_cast<int>(qp.Ain.rows());

  QpResult res;
  res.x = Vector::Zero(n);
  res.y = Vector::Zero(p);
  res.z = Vector::Zero(m);
  if (n == 0) {
    res.status = QpStatus::Optimal;
    return res;
  }

  Eigen::LLT<Matrix> llt(qp.H);
  if (llt.info() != Eigen::Success) throw InvalidArgument("qp: Hessian is not positive definite");
  const Matrix L = llt.matrixL();

  Dual dual{n, L.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n)).transpose(), Matrix::Zero(n, n)};
  const double c1 = qp.H.trace();
  const double c2 = dual.J.trace();

  // Internal convention: ce_i'x + ce0_i = 0, ci_i'x + ci0_i >= 0.
  const Matrix CE = qp.Aeq.transpose();
  const Vector ce0 = -qp.beq;
  const Matrix CI = -qp.Ain.transpose();
  const Vector ci0 = qp.bin;

  Vector x = -llt.solve(qp.g);
  double f = 0.5 * qp.g.dot(x);

  const int total = p + m;
  std::vector<int> A(total + 1, 0), A_old(total + 1, 0), iai(total + 1, 0);
  std::vector<bool> iaexcl(total + 1, true);
  Vector u = Vector::Zero(total + 1), u_old = Vector::Zero(total + 1);
  Vector s = Vector::Zero(m), d = Vector::Zero(n), z = Vector::Zero(n), r = Vector::Zero(total + 1);
  Vector x_old = x;
  int iq = 0;

  for (int i = 0; i < p; ++i) {
    const Vector np = CE.col(i);
    dual.compute_d(d, np);
    dual.update_z(z, d, iq);
    dual.update_r(r, d, iq);
    double t2 = 0.0;
    if (std::abs(z.dot(z)) > kEps) t2 = (-np.dot(x) - ce0(i)) / z.dot(np);
    x += t2 * z;
    u(iq) = t2;
    u.head(iq) -= t2 * r.head(iq);
    f += 0.5 * t2 * t2 * z.dot(np);
    A[i] = -i - 1;
    if (!dual.add_constraint(d, iq)) {
      res.status = QpStatus::Infeasible;
      res.x = x;
      return res;
    }
  }

  for (int i = 0; i < m; ++i) iai[i] = i;

  int ip = 0;
  int iter = 0;
  auto finish = [&](QpStatus st) {
    // Rows dropped as dependent, or accepted by the scaled stopping test, can still be violated.
    if (st == QpStatus::Optimal && m > 0) {
      const Vector slack = qp.Ain * x - qp.bin;
      const double row_scale = 1.0 + qp.bin.lpNorm<Eigen::Infinity>() +
                               (qp.Ain.cwiseAbs() * x.cwiseAbs()).lpNorm<Eigen::Infinity>();
      if (slack.maxCoeff() > 1e-9 * row_scale) st = QpStatus::Infeasible;
    }
    res.status = st;
    res.x = x;
    res.iterations = iter;
    for (int i = 0; i < iq; ++i) {
      if (A[i] < 0) {
        res.y(-A[i] - 1) = -u(i);
      } else {
        res.z(A[i]) = u(i);
        res.active.push_back(A[i]);
      }
    }
    res.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
    return res;
  };

  while (true) {
    // Step 1: choose a violated constraint.
    if (++iter > max_iterations) return finish(QpStatus::IterationLimit);
    for (int i = p; i < iq; ++i) iai[A[i]] = -1;
    double psi = 0.0;
    for (int i = 0; i < m; ++i) {
      iaexcl[i] = true;
      s(i) = CI.col(i).dot(x) + ci0(i);
      psi += std::min(0.0, s(i));
    }
    if (std::abs(psi) <= m * kEps * c1 * c2 * 100.0) return finish(QpStatus::Optimal);

    for (int i = 0; i < iq; ++i) {
      u_old(i) = u(i);
      A_old[i] = A[i];
    }
    x_old = x;

    bool restart = false;
    while (!restart) {
      double ss = 0.0;
      for (int i = 0; i < m; ++i) {
        if (s(i) < ss && iai[i] != -1 && iaexcl[i]) {
          ss = s(i);
          ip = i;
        }
      }
      if (ss >= 0.0) return finish(QpStatus::Optimal);

      Vector np = CI.col(ip);
      u(iq) = 0.0;
      A[iq] = ip;

      // Step 2: determine step direction, possibly dropping constraints.
      while (true) {
        if (++iter > max_iterations) return finish(QpStatus::IterationLimit);
        dual.compute_d(d, np);
        dual.update_z(z, d, iq);
        dual.update_r(r, d, iq);

        int l = 0;
        double t1 = kInf;
        for (int k = p; k < iq; ++k) {
          if (r(k) > 0.0 && u(k) / r(k) < t1) {
            t1 = u(k) / r(k);
            l = A[k];
          }
        }
        double t2 = kInf;
        if (std::abs(z.dot(z)) > kEps) t2 = -s(ip) / z.dot(np);
        const double t = std::min(t1, t2);

        if (t >= kInf) return finish(QpStatus::Infeasible);

        if (t2 >= kInf) {
          u.head(iq) -= t * r.head(iq);
          u(iq) += t;
          iai[l] = l;
          dual.delete_constraint(A, u, p, iq, l);
          continue;
        }

        x += t * z;
        f += t * z.dot(np) * (0.5 * t + u(iq));
        u.head(iq) -= t * r.head(iq);
        u(iq) += t;

        if (t == t2) {
          if (!dual.add_constraint(d, iq)) {
            iaexcl[ip] = false;
            dual.delete_constraint(A, u, p, iq, ip);
            for (int i = 0; i < m; ++i) iai[i] = i;
            for (int i = p; i < iq; ++i) {
              A[i] = A_old[i];
              u(i) = u_old(i);
              iai[A[i]] = -1;
            }
            x = x_old;
            break;  // pick another violated constraint
          }
          iai[ip] = -1;
          restart = true;
          break;
        }

        iai[l] = l;
        dual.delete_constraint(A, u, p, iq, l);
        s(ip) = CI.col(ip).dot(x) + ci0(ip);
      }
    }
  }
}

ElasticResult solve_qp_elastic(const QpProblem& qp, const std::vector<bool>& soft, double penalty, double reg) {
  check_dims(qp);
  const auto n = qp.H.rows();
  const auto m = qp.Ain.rows();
  if (static_cast<Eigen::Index>(soft.size()) != m) throw InvalidArgument("qp: soft mask size mismatch");
  std::vector<int> slack_of(m, -1);
  int ns = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (soft[i]) slack_of[i] = ns++;

  QpProblem e;
  e.H = Matrix::Zero(n + ns, n + ns);
  e.H.topLeftCorner(n, n) = qp.H;
  e.H.bottomRightCorner(ns, ns).diagonal().setConstant(reg);
  e.g = Vector::Constant(n + ns, penalty);
  e.g.head(n) = qp.g;
  e.Aeq = Matrix::Zero(qp.Aeq.rows(), n + ns);
  if (qp.Aeq.rows() > 0) e.Aeq.leftCols(n) = qp.Aeq;
  e.beq = qp.beq;
  e.Ain = Matrix::Zero(m + ns, n + ns);
  e.bin = Vector::Zero(m + ns);
  if (m > 0) e.Ain.topLeftCorner(m, n) = qp.Ain;
  e.bin.head(m) = qp.bin;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (slack_of[i] < 0) continue;
    e.Ain(i, n + slack_of[i]) = -1.0;
    e.Ain(m + slack_of[i], n + slack_of[i]) = -1.0;
  }

  ElasticResult out;
  QpResult full = solve_qp(e);
  out.slack = full.x.tail(ns);
  out.qp = full;
  out.qp.x = full.x.head(n);
  out.qp.z = full.z.head(m);
  out.qp.objective = 0.5 * out.qp.x.dot(qp.H * out.qp.x) + qp.g.dot(out.qp.x);
  std::vector<int> act;
  for (int a : full.active)
    if (a < m) act.push_back(a);
  out.qp.active = act;
  return out;
}

}  // namespace hcmpc
