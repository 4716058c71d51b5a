#include "hcmpc/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <thread>

namespace hcmpc {

void ScenarioConfig::validate() const {
  if (pairs.empty()) throw InvalidArgument("scenario: no horizon pairs");
  for (const auto& p : pairs) p.validate();
  const auto m = model();
  if (x0.size() != m->state_dim)
    throw InvalidArgument("scenario: x0 has " + std::to_string(x0.size()) + " entries, model expects " +
                          std::to_string(m->state_dim));
  if (!in_set(*m, x0, ConstraintSet::X1, 1e-9)) throw InvalidArgument("scenario: x0 violates X1");
  if (jobs < 1) throw InvalidArgument("scenario: jobs must be at least 1");
  closed_loop.solver.validate();
}

std::shared_ptr<const ModelSpec> ScenarioConfig::model() const {
  return std::make_shared<const ModelSpec>(make_builtin(model_id, overrides));
}

std::vector<HorizonPair> all_pairs(int N) {
  std::vector<HorizonPair> out;
  for (int nt = 2; nt <= N; ++nt) out.push_back({N, nt});
  return out;
}

ScenarioConfig scalar_scenario(const Overrides& overrides) {
  ScenarioConfig c;
  c.name = "scalar_test";
  c.model_id = "scalar_test";
  c.overrides = overrides;
  for (int N = 4; N <= 6; ++N)
    for (const auto& p : all_pairs(N)) c.pairs.push_back(p);
  c.x0 = Vector::Constant(1, 0.4);
  c.analysis.provenance = Provenance::FullTrajectory;
  c.analysis.check_tail = true;
  return c;
}

ScenarioConfig double_integrator_scenario(const Overrides& overrides) {
  ScenarioConfig c;
  c.name = "double_integrator";
  c.model_id = "double_integrator";
  c.overrides = overrides;
  for (int N : {10, 20})
    for (const auto& p : all_pairs(N)) c.pairs.push_back(p);
  c.x0 = Vector(4);
  c.x0 << -0.8, 0.6, -0.45, 0.65;
  c.analysis.provenance = Provenance::FullTrajectory;
  c.analysis.baseline_lcss = true;
  return c;
}

ScenarioConfig quadrotor_scenario(const Overrides& overrides) {
  ScenarioConfig c;
  c.name = "quadrotor";
  c.model_id = "quadrotor6dof";
  c.overrides = overrides;
  c.pairs = {{16, 13}, {27, 24}};
  c.x0 = Vector::Zero(12);
  c.x0.head<3>() << 1.0, 2.0, -1.0;
  c.analysis.provenance = Provenance::X0Only;
  c.analysis.delta_method = DeltaMethod::Prop4;
  c.analysis.nu_method = NuMethod::Prop7;
  return c;
}

ScenarioConfig scenario_preset(const std::string& name, const Overrides& overrides) {
  if (name == "scalar_test") return scalar_scenario(overrides);
  if (name == "double_integrator") return double_integrator_scenario(overrides);
  if (name == "quadrotor" || name == "quadrotor6dof") return quadrotor_scenario(overrides);
  throw InvalidArgument("unknown scenario '" + name + "'");
}

SweepRow run_row(const ScenarioConfig& config, const HorizonPair& pair) {
  SweepRow row;
  row.horizons = pair;
  try {
    const auto model = config.model();
    row.run = run(model, pair, config.x0, config.closed_loop);
    row.cost = truncated_cost(row.run);
    if (row.run.termination == Termination::SolverFailure) {
      row.error = "solver failure at step " + std::to_string(row.run.failed_step);
      return row;
    }
    AnalysisOptions opts = config.analysis;
    opts.solver = config.closed_loop.solver;
    row.steps = analyze_run(row.run, opts);
    row.report = aggregate_bounds(row.run, opts, row.steps);
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

std::vector<SweepRow> sweep(const ScenarioConfig& config, int jobs) {
  std::vector<SweepRow> rows(config.pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) rows[i] = run_row(config, config.pairs[i]);
  };
  const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(rows.size() ? rows.size() : 1)));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

namespace {

struct OracleCache {
  std::shared_ptr<const ModelSpec> model;
  GridSpec grid;
  std::map<std::tuple<int, int, int>, DpTables> tables;

  const DpTables& get(OracleProblem problem, int N, int Nt) {
    const auto key = std::make_tuple(static_cast<int>(problem), N, Nt);
    auto it = tables.find(key);
    if (it == tables.end()) it = tables.emplace(key, dp_value(model, N, Nt, problem, grid)).first;
    return it->second;
  }
};

std::string label(const char* kind, int N, int Nt) {
  std::string s = std::string(kind) + "(N=" + std::to_string(N);
  if (Nt > 0) s += ",Nt=" + std::to_string(Nt);
  return s + ")";
}

}  // namespace

OracleCheckReport oracle_check(const ScenarioConfig& config) {
  const auto model = config.model();
  if (model->state_dim != 1 || model->input_dim != 1)
    throw UnsupportedConfiguration("oracle-check supports scalar models only");
  const auto& o = config.oracle;
  OracleCache cache;
  cache.model = model;
  cache.grid = GridSpec::defaults_for(*model);
  cache.grid.state_lower = Vector::Constant(1, -o.state_range);
  cache.grid.state_upper = Vector::Constant(1, o.state_range);
  cache.grid.state_nodes = {o.state_nodes};
  cache.grid.input_nodes = {o.input_nodes};
  cache.grid.interpolation = o.interpolation;

  std::vector<double> xs;
  for (int i = 0; i < o.samples; ++i)
    xs.push_back(o.samples == 1 ? 0.0 : -o.sample_range + 2.0 * o.sample_range * i / (o.samples - 1));

  OracleCheckReport rep;
  const SolverOptions& so = config.closed_loop.solver;
  const auto add = [&](std::string check, std::string problem, double x0, double computed, double reference,
                       double error, double tol, bool ok) {
    rep.entries.push_back({std::move(check), std::move(problem), x0, computed, reference, error, tol, ok});
  };
  const auto value_entry = [&](const std::string& problem, double x0, const OpenLoopSolution& sol, double ref) {
    const bool solved = sol.optimal();
    const double err = solved ? std::abs(sol.value - ref) : std::numeric_limits<double>::infinity();
    add("value", problem, x0, sol.value, ref, err, o.tolerance, solved && err <= o.tolerance);
  };

  for (int N = 1; N <= o.max_N; ++N) {
    const auto& uc = cache.get(OracleProblem::UC, N, 0);
    for (double x : xs) {
      const Vector x0 = Vector::Constant(1, x);
      value_entry(label("UC", N, 0), x, solve(build_ucmpc(model, N, x0), nullptr, so), uc.value_at(x0));
    }
    for (int Nt = 2; Nt <= N; ++Nt) {
      const auto& hc = cache.get(OracleProblem::HC, N, Nt);
      const auto& tail_table = cache.get(OracleProblem::UC, Nt - 1, 0);
      for (double x : xs) {
        const Vector x0 = Vector::Constant(1, x);
        const auto sol = solve(build_hcmpc(model, {N, Nt}, x0), nullptr, so);
        value_entry(label("HC", N, Nt), x, sol, hc.value_at(x0));
        if (!sol.optimal()) continue;
        const Vector xs_pivot = sol.states[static_cast<std::size_t>(N - Nt + 1)];
        const double tail = tail_value(sol, {N, Nt});
        const double ref = tail_table.value_at(xs_pivot);
        const double err = std::abs(tail - ref);
        add("lemma3", label("HC", N, Nt), x, tail, ref, err, o.tolerance, err <= o.tolerance);
      }
    }
  }
  for (int Nt = 2; Nt <= o.max_N; ++Nt) {
    for (double x : xs) {
      const Vector x0 = Vector::Constant(1, x);
      const auto hc = solve(build_hcmpc(model, {Nt, Nt}, x0), nullptr, so);
      const auto uc = solve(build_ucmpc(model, Nt - 1, x0), nullptr, so);
      const bool solved = hc.optimal() && uc.optimal();
      const double diff = hc.value - uc.value;
      const double err = solved ? std::max(0.0, -diff) : std::numeric_limits<double>::infinity();
      add("lemma7", label("HC-UC", Nt, Nt), x, hc.value, uc.value, err, 1e-8, solved && diff >= -1e-8);
    }
  }

  double worst = -1.0;
  for (std::size_t i = 0; i < rep.entries.size(); ++i) {
    const auto& e = rep.entries[i];
    rep.pass = rep.pass && e.pass;
    const double ratio = e.error / e.tolerance;
    if (ratio > worst) {
      worst = ratio;
      rep.worst = static_cast<int>(i);
    }
  }
  return rep;
}

}  // namespace hcmpc
