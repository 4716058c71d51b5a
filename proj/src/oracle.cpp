#include "hcmpc/oracle.hpp"

#include <cmath>
#include <limits>

namespace hcmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Vector> input_grid(const GridSpec& g) {
  std::vector<Vector> out;
  const auto m = g.input_lower.size();
  std::size_t total = 1;
  for (int n : g.input_nodes) total *= static_cast<std::size_t>(n);
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vector u(m);
    std::size_t rem = idx;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto n = static_cast<std::size_t>(g.input_nodes[i]);
      const auto k = rem % n;
      rem /= n;
      u(i) = g.input_lower(i) + (g.input_upper(i) - g.input_lower(i)) * static_cast<double>(k) / (n - 1);
    }
    out.push_back(u);
  }
  return out;
}

}  // namespace

void GridSpec::validate(const ModelSpec& model) const {
  const auto n = static_cast<std::size_t>(model.state_dim);
  const auto m = static_cast<std::size_t>(model.input_dim);
  if (state_nodes.size() != n || static_cast<std::size_t>(state_lower.size()) != n ||
      static_cast<std::size_t>(state_upper.size()) != n)
    throw InvalidArgument("grid: state axes do not match the model");
  if (input_nodes.size() != m || static_cast<std::size_t>(input_lower.size()) != m ||
      static_cast<std::size_t>(input_upper.size()) != m)
    throw InvalidArgument("grid: input axes do not match the model");
  for (int v : state_nodes)
    if (v < 3) throw InvalidArgument("grid: resolutions must be at least 3");
  for (int v : input_nodes)
    if (v < 3) throw InvalidArgument("grid: resolutions must be at least 3");
  if ((state_lower.array() >= state_upper.array()).any() || (input_lower.array() > input_upper.array()).any())
    throw InvalidArgument("grid: empty range");
}

GridSpec GridSpec::defaults_for(const ModelSpec& model) {
  GridSpec g;
  const int n = model.state_dim;
  g.state_lower = Vector::Constant(n, -1.0);
  g.state_upper = Vector::Constant(n, 1.0);
  g.state_nodes.assign(n, n == 1 ? 401 : 101);
  g.input_lower = model.input_lower;
  g.input_upper = model.input_upper;
  g.input_nodes.assign(model.input_dim, 201);
  return g;
}

double GridSpec::state_spacing() const {
  double h = 0.0;
  for (std::size_t i = 0; i < state_nodes.size(); ++i)
    h = std::max(h, (state_upper(i) - state_lower(i)) / (state_nodes[i] - 1));
  return h;
}

std::size_t DpTables::node_count() const {
  std::size_t total = 1;
  for (int v : grid.state_nodes) total *= static_cast<std::size_t>(v);
  return total;
}

Vector DpTables::node(std::size_t idx) const {
  const auto n = grid.state_lower.size();
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto res = static_cast<std::size_t>(grid.state_nodes[i]);
    const auto k = idx % res;
    idx /= res;
    x(i) = grid.state_lower(i) + (grid.state_upper(i) - grid.state_lower(i)) * static_cast<double>(k) / (res - 1);
  }
  return x;
}

double DpTables::interpolate(int j, const Vector& x) const {
  const auto& table = W[static_cast<std::size_t>(j)];
  const auto n = x.size();
  std::vector<std::size_t> base(n);
  std::vector<double> frac(n);
  std::vector<std::size_t> stride(n);
  std::size_t s = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = grid.state_lower(i), hi = grid.state_upper(i);
    const int res = grid.state_nodes[i];
    const double h = (hi - lo) / (res - 1);
    const double t = (x(i) - lo) / h;
    if (t < -1e-9 || t > res - 1 + 1e-9) return kInf;
    const double tc = std::clamp(t, 0.0, static_cast<double>(res - 1));
    std::size_t b = static_cast<std::size_t>(std::floor(tc));
    if (b >= static_cast<std::size_t>(res - 1)) b = static_cast<std::size_t>(res - 2);
    base[i] = b;
    frac[i] = tc - static_cast<double>(b);
    stride[i] = s;
    s *= static_cast<std::size_t>(res);
  }
  if (grid.interpolation == Interpolation::Nearest) {
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < n; ++i) idx += (base[i] + (frac[i] >= 0.5 ? 1 : 0)) * stride[i];
    return table[idx];
  }
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << n); ++corner) {
    double w = 1.0;
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool up = (corner >> i) & 1u;
      w *= up ? frac[i] : 1.0 - frac[i];
      idx += (base[i] + (up ? 1 : 0)) * stride[i];
    }
    if (w == 0.0) continue;
    const double v = table[idx];
    if (std::isinf(v)) return kInf;
    acc += w * v;
  }
  return acc;
}

std::pair<double, Vector> DpTables::first_stage(int j, const Vector& x) const {
  const auto inputs = input_grid(grid);
  double best = kInf;
  Vector arg = model->cost.u_ref;
  const ConstraintSet next_set = stage_sets[static_cast<std::size_t>(j)];
  for (const auto& u : inputs) {
    const Vector xn = model->dynamics(x, u);
    if (!in_set(*model, xn, next_set, 1e-12)) continue;
    const double tail = interpolate(j + 1, xn);
    if (std::isinf(tail)) continue;
    const double v = model->cost(x, u) + tail;
    if (v < best) {
      best = v;
      arg = u;
    }
  }
  return {best, arg};
}

double DpTables::value_at(const Vector& x0) const { return first_stage(0, x0).first; }

Vector DpTables::policy(const Vector& x0) const { return first_stage(0, x0).second; }

DpTables dp_value(std::shared_ptr<const ModelSpec> model, int N, int Ntilde, OracleProblem problem,
                  const GridSpec& grid) {
  if (!model) throw InvalidArgument("dp_value: null model");
  if (model->state_dim > 2 || model->input_dim > 1)
    throw InvalidArgument("dp_value: oracle supports state_dim <= 2 and input_dim <= 1");
  for (const auto* set : {&model->x1, &model->x2})
    for (const auto& p : *set)
      if (p.uses_previous) throw InvalidArgument("dp_value: stage-coupled predicates are not supported");
  grid.validate(*model);

  DpTables t;
  t.model = model;
  t.grid = grid;
  t.N = N;
  if (problem == OracleProblem::HC) {
    HorizonPair{N, Ntilde}.validate();
    t.stage_sets = build_hcmpc(model, {N, Ntilde}, Vector::Zero(model->state_dim)).stage_sets;
  } else {
    if (N < 1) throw InvalidArgument("dp_value: N must be at least 1");
    t.stage_sets.assign(static_cast<std::size_t>(N), ConstraintSet::X2);
  }

  const std::size_t nodes = t.node_count();
  const auto inputs = input_grid(grid);
  t.W.assign(static_cast<std::size_t>(N) + 1, std::vector<double>(nodes, 0.0));
  std::vector<Vector> xs(nodes);
  for (std::size_t i = 0; i < nodes; ++i) xs[i] = t.node(i);

  // Stage costs and successors do not depend on j; cache them.
  std::vector<std::vector<double>> cost(nodes, std::vector<double>(inputs.size()));
  std::vector<std::vector<Vector>> succ(nodes, std::vector<Vector>(inputs.size()));
  std::vector<std::vector<char>> in1(nodes, std::vector<char>(inputs.size())), in2 = in1;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t a = 0; a < inputs.size(); ++a) {
      cost[i][a] = model->cost(xs[i], inputs[a]);
      succ[i][a] = model->dynamics(xs[i], inputs[a]);
      in1[i][a] = in_set(*model, succ[i][a], ConstraintSet::X1, 1e-12);
      in2[i][a] = in_set(*model, succ[i][a], ConstraintSet::X2, 1e-12);
    }
  }

  for (int j = N - 1; j >= 0; --j) {
    const bool x1_next = t.stage_sets[static_cast<std::size_t>(j)] == ConstraintSet::X1;
    auto& Wj = t.W[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < nodes; ++i) {
      double best = kInf;
      for (std::size_t a = 0; a < inputs.size(); ++a) {
        if (!(x1_next ? in1[i][a] : in2[i][a])) continue;
        const double tail = t.interpolate(j + 1, succ[i][a]);
        if (std::isinf(tail)) continue;
        best = std::min(best, cost[i][a] + tail);
      }
      Wj[i] = best;
    }
  }
  return t;
}

double dp_closed_loop(std::shared_ptr<const ModelSpec> model, const HorizonPair& horizons, const Vector& x0, int T,
                      const GridSpec& grid) {
  if (T < 0) throw InvalidArgument("dp_closed_loop: T must be nonnegative");
  const DpTables t = dp_value(model, horizons.N, horizons.Ntilde, OracleProblem::HC, grid);
  Vector x = x0;
  double J = 0.0;
  for (int k = 0; k < T; ++k) {
    const Vector u = t.policy(x);
    J += model->cost(x, u);
    x = model->dynamics(x, u);
  }
  return J;
}

}  // namespace hcmpc
