#include "hcmpc/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace hcmpc {

namespace {

void fold(std::optional<double>& acc, const std::optional<double>& v, bool take_max) {
  if (!v) return;
  if (!acc) acc = v;
  else acc = take_max ? std::max(*acc, *v) : std::min(*acc, *v);
}

// Inputs of `sol` from index `from` on, as a warm start for an auxiliary problem.
OpenLoopSolution tail_guess(const OpenLoopSolution& sol, int from) {
  OpenLoopSolution w;
  const int n = sol.horizon();
  for (int k = std::min(from, n - 1); k < n; ++k) w.inputs.push_back(sol.inputs[k]);
  return w;
}

std::optional<double> solve_value(const OcpSpec& ocp, const OpenLoopSolution& guess, const SolverOptions& so,
                                  StepAnalysis& sa, const char* what) {
  auto sol = solve(ocp, &guess, so);
  if (!sol.optimal()) {
    auto cold = solve(ocp, nullptr, so);
    if (cold.optimal() || cold.constraint_violation < sol.constraint_violation) sol = std::move(cold);
  }
  if (!sol.optimal()) {
    sa.aux_solves_ok = false;
    sa.notes.push_back(std::string(what) + " solve ended with status " + to_string(sol.status));
    return std::nullopt;
  }
  return sol.value;
}

}  // namespace

StepAnalysis analyze_step(const ClosedLoopRun& run, int k, const AnalysisOptions& opts) {
  if (k < 0 || k + 1 >= static_cast<int>(run.steps.size()))
    throw InvalidArgument("analyze_step: needs records k and k+1");
  const HorizonPair h = run.horizons;
  const ModelSpec& model = *run.model;
  const auto& cur = run.steps[k];
  const auto& nxt = run.steps[k + 1];
  const OpenLoopSolution& sk = cur.solution;
  const OpenLoopSolution& sk1 = nxt.solution;
  const int K = h.gap();

  StepAnalysis sa;
  sa.k = k;
  sa.lambda0 = sk.stage_costs.front();
  sa.V_k = sk.value;
  sa.V_k1 = sk1.value;
  sa.x_s = sk.states[K + 1];
  sa.x_p = sk1.states[K];
  sa.tail = tail_value(sk, h);

  const double ref = run.steps.front().solution.stage_costs.front();
  if (!(sa.lambda0 > opts.negligible_lambda * ref)) {
    sa.skipped = true;
    sa.notes.push_back("negligible lambda0");
    return sa;
  }

  const OpenLoopSolution guess_s = tail_guess(sk, K + 1);
  const OpenLoopSolution guess_p = tail_guess(sk1, K);
  if (auto v = solve_value(build_hcmpc(run.model, {h.Ntilde, h.Ntilde}, sa.x_s), guess_s, opts.solver, sa,
                           "V_Nt^Nt(x_s)")) {
    sa.V_NtNt_xs = *v;
    sa.alpha_online = alpha_online(sa.V_k, sa.V_NtNt_xs, sa.tail, sa.lambda0);
  }
  // Cold start keeps the tail check independent of the recorded solution.
  if (opts.check_tail)
    sa.V_Ntm1_xs_direct =
        solve_value(build_ucmpc(run.model, h.Ntilde - 1, sa.x_s), OpenLoopSolution{}, opts.solver, sa, "V_{Nt-1}(x_s)");

  for (int n = K; n <= h.N - 1; ++n) sa.V_NtNt_xp += sk1.stage_costs[n];
  if (auto v = solve_value(build_ucmpc(run.model, h.Ntilde - 1, sa.x_p), guess_p, opts.solver, sa, "V_{Nt-1}(x_p)")) {
    sa.V_Ntm1_xp = *v;
    sa.omega_online = omega_online(sa.lambda0, sa.V_NtNt_xp, sa.V_Ntm1_xp);
    if (*sa.omega_online < -1e-8 * std::max(1.0, sa.V_NtNt_xp) / sa.lambda0)
      sa.notes.push_back("negative omega: V_Nt^Nt(x_p) < V_{Nt-1}(x_p), solver suboptimality");
  }

  try {
    sa.max_rates = estimate_sigmas(sk, h, RateMode::MaxRates);
  } catch (const DegenerateState& e) {
    sa.notes.push_back(std::string("max rates: ") + e.what());
  }
  try {
    sa.min_rates = estimate_sigmas(sk1, h, RateMode::MinRates);
  } catch (const DegenerateState& e) {
    sa.notes.push_back(std::string("min rates: ") + e.what());
  }
  try {
    sa.kappa = kappa_estimate(model, cur.x, cur.u);
  } catch (const DegenerateState& e) {
    sa.notes.push_back(std::string("kappa: ") + e.what());
  }

  if (opts.delta_method == DeltaMethod::Prop4 && sa.max_rates.sigma2) {
    try {
      const auto rho = rho_terms(model, sa.x_s);
      sa.delta_prop4 = delta_prop4(rho.first, rho.second, *sa.max_rates.sigma2, h.Ntilde);
    } catch (const std::exception& e) {
      sa.notes.push_back(std::string("delta prop4: ") + e.what());
    }
  }
  if (opts.nu_method == NuMethod::Prop7 && sa.min_rates.sigma4) {
    try {
      const auto phi = phi_terms(model, sa.x_p);
      std::string reason;
      sa.nu_prop7 = nu_prop7(phi.first, phi.second, sa.min_rates.C4, *sa.min_rates.sigma4, h.Ntilde, &reason);
      if (!sa.nu_prop7) sa.notes.push_back("nu: " + reason);
    } catch (const std::exception& e) {
      sa.notes.push_back(std::string("nu prop7: ") + e.what());
    }
  }

  if (opts.baseline_lcss && K >= 1) {
    std::vector<double> values;
    std::vector<double> first_costs;
    bool ok = true;
    for (int n = h.Ntilde; n <= h.N && ok; ++n) {
      if (n == h.N) {
        values.push_back(sk.value);
      } else {
        auto v = solve_value(build_hcmpc(run.model, {n, h.Ntilde}, cur.x), sk, opts.solver, sa, "V_n^Nt(x_k)");
        if (!v) ok = false;
        else values.push_back(*v);
      }
      if (n > h.Ntilde) first_costs.push_back(model.cost(cur.x, sk.inputs[h.N - n]));
    }
    if (ok) {
      try {
        sa.beta = lcss_beta(values, first_costs);
      } catch (const DegenerateState& e) {
        sa.notes.push_back(std::string("beta: ") + e.what());
      }
    }
  }
  return sa;
}

std::vector<StepAnalysis> analyze_run(const ClosedLoopRun& run, const AnalysisOptions& opts) {
  const int available = static_cast<int>(run.steps.size()) - 1;
  const int count = opts.provenance == Provenance::X0Only ? std::min(1, available) : available;
  std::vector<StepAnalysis> steps;
  for (int k = 0; k < count; ++k) steps.push_back(analyze_step(run, k, opts));
  return steps;
}

BoundReport bound_report(const ClosedLoopRun& run, const AnalysisOptions& opts, std::vector<StepAnalysis>* steps_out) {
  auto steps = analyze_run(run, opts);
  BoundReport r = aggregate_bounds(run, opts, steps);
  if (steps_out) *steps_out = std::move(steps);
  return r;
}

BoundReport aggregate_bounds(const ClosedLoopRun& run, const AnalysisOptions& opts,
                             const std::vector<StepAnalysis>& all_steps) {
  BoundReport r;
  r.horizons = run.horizons;
  r.provenance = opts.provenance;
  r.delta_method = opts.delta_method;
  r.nu_method = opts.nu_method;
  if (run.steps.empty()) {
    r.notes.push_back("empty run");
    return r;
  }
  const ModelSpec& model = *run.model;
  const HorizonPair h = run.horizons;
  const auto& first = run.steps.front();
  r.V = first.solution.value;
  r.lambda0 = first.solution.stage_costs.front();
  r.lmax = cost_extrema_over_inputs(model, first.x, Extremum::Max);
  r.lmin = cost_extrema_over_inputs(model, first.x, Extremum::Min);

  std::vector<const StepAnalysis*> steps;
  for (const auto& sa : all_steps)
    if (opts.provenance == Provenance::FullTrajectory || sa.k == 0) steps.push_back(&sa);
  if (steps.empty()) r.notes.push_back("run too short for bound estimation");

  std::optional<double> s1, s2, s3, s4, kappa, dprop4, nuprop7, beta, a_on, w_on;
  bool nu_missing = false;
  for (const auto* p : steps) {
    const StepAnalysis& sa = *p;
    if (sa.skipped) continue;
    fold(s1, sa.max_rates.sigma1, true);
    fold(s2, sa.max_rates.sigma2, true);
    fold(s3, sa.min_rates.sigma3, false);
    fold(s4, sa.min_rates.sigma4, false);
    fold(kappa, sa.kappa, false);
    fold(dprop4, sa.delta_prop4, true);
    fold(nuprop7, sa.nu_prop7, false);
    fold(beta, sa.beta, true);
    fold(a_on, sa.alpha_online, false);
    fold(w_on, sa.omega_online, false);
    if (opts.nu_method == NuMethod::Prop7 && !sa.nu_prop7) nu_missing = true;
    for (const auto& n : sa.notes) r.notes.push_back("step " + std::to_string(sa.k) + ": " + n);
  }
  if (nu_missing) nuprop7.reset();

  r.est.sigma1 = s1;
  r.est.sigma2 = s2;
  r.est.sigma3 = s3;
  r.est.sigma4 = s4;
  r.est.check_orderings();
  r.kappa = kappa;
  r.beta = beta;
  r.alpha_online = a_on;
  r.omega_online = w_on;

  // delta
  if (opts.delta_method == DeltaMethod::Heuristic) {
    if (s1 && s2) {
      try {
        r.delta = delta_heuristic(*s1, *s2);
      } catch (const Inapplicable& e) {
        r.notes.push_back(std::string("delta: ") + e.what());
      }
    }
  } else {
    r.delta = dprop4;
    if (!dprop4) r.notes.push_back("delta: prop4 unavailable");
  }
  // nu
  if (opts.nu_method == NuMethod::Heuristic) {
    if (s3 && s4) {
      try {
        r.nu = nu_heuristic(*s3, *s4);
      } catch (const Inapplicable& e) {
        r.notes.push_back(std::string("nu: ") + e.what());
      }
    }
  } else {
    r.nu = nuprop7;
    if (!nuprop7) r.notes.push_back("nu: prop7 inapplicable");
  }

  bool explicit_ok = true;
  try {
    h.validate_explicit();
  } catch (const InvalidArgument& e) {
    explicit_ok = false;
    r.notes.push_back(std::string("explicit bounds: ") + e.what());
  }

  if (explicit_ok && s1 && s2 && r.delta) {
    if (*r.delta < 0.0) r.notes.push_back("delta negative; explicit alpha evaluated with it as is");
    r.alpha_explicit = alpha_explicit(h, r.est, *r.delta, true);
    try {
      r.stability_gap = stability_horizon_gap(r.est, *r.delta);
    } catch (const Inapplicable& e) {
      r.notes.push_back(std::string("stability gap: ") + e.what());
    }
    if (*r.alpha_explicit > 0.0 && *r.alpha_explicit <= 1.0)
      r.upper_prop2 = cl_upper_bound(h, r.est, *r.alpha_explicit, r.lmax);
  }
  if (explicit_ok && s3 && s4 && r.nu && kappa) {
    try {
      r.omega_explicit = omega_explicit(h, r.est, *r.nu, *kappa);
    } catch (const Inapplicable& e) {
      r.notes.push_back(std::string("explicit omega: ") + e.what());
    }
    if (r.omega_explicit && *r.omega_explicit < 1.0)
      r.lower_prop5 = cl_lower_bound(h, r.est, *r.omega_explicit, *kappa, r.lmin);
  }
  if (s1 && s2 && s3 && s4 && kappa && r.delta && r.nu) {
    try {
      r.omega_gap = omega_horizon_gap(r.est, *kappa, *r.delta, *r.nu);
    } catch (const Inapplicable& e) {
      r.notes.push_back(std::string("omega gap: ") + e.what());
    }
  }
  if (beta && h.gap() >= 1) r.alpha_lcss = alpha_lcss(*beta, h);

  if (a_on) r.alpha_applicable = *a_on > 0.0 && *a_on <= 1.0;
  if (a_on && w_on) r.omega_applicable = *w_on >= 0.0 && *w_on <= 1.0 - *a_on;
  if (a_on && w_on) {
    const auto sw = sandwich_interval(r.V, *a_on, *w_on);
    r.interval_online = sw.interval;
    if (!sw.interval) r.notes.push_back("online interval: " + sw.reason);
  }
  if (r.alpha_explicit && r.omega_explicit) {
    const auto sw = sandwich_interval(r.V, *r.alpha_explicit, *r.omega_explicit);
    r.interval_explicit = sw.interval;
    if (!sw.interval) r.notes.push_back("explicit interval: " + sw.reason);
  }
  return r;
}

}  // namespace hcmpc
