#include "hcmpc/suboptimality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hcmpc {

namespace {

double need(const std::optional<double>& v, const char* name) {
  if (!v) throw InvalidArgument(std::string("missing decay estimate ") + name);
  return *v;
}

int ceil_ratio(double num, double den) {
  // Guards against 2.0000000000000004-style round-off in exact cases.
  return static_cast<int>(std::ceil(num / den - 1e-12));
}

}  // namespace

void DecayEstimate::check_orderings() {
  violations.clear();
  auto flag = [&](const std::string& s) { violations.push_back(s); };
  if (sigma1 && *sigma1 >= 1.0) flag("sigma1 >= 1");
  if (sigma2 && *sigma2 >= 1.0) flag("sigma2 >= 1");
  if (sigma3 && *sigma3 >= 1.0) flag("sigma3 >= 1");
  if (sigma4 && *sigma4 >= 1.0) flag("sigma4 >= 1");
  if (sigma1 && sigma2 && !(*sigma1 > *sigma2)) flag("sigma1 <= sigma2");
  if (sigma3 && sigma4 && !(*sigma3 > *sigma4)) flag("sigma3 <= sigma4");
  if (sigma1 && sigma3 && *sigma1 < *sigma3) flag("sigma1 < sigma3");
  if (sigma2 && sigma4 && *sigma2 < *sigma4) flag("sigma2 < sigma4");
  valid = violations.empty();
}

double geometric_sum(double s, int k) {
  if (k <= 0) return 0.0;
  if (s == 1.0) return static_cast<double>(k);
  return (1.0 - std::pow(s, k)) / (1.0 - s);
}

double tail_value(const OpenLoopSolution& sol, const HorizonPair& h) {
  h.validate();
  if (static_cast<int>(sol.stage_costs.size()) != h.N)
    throw InvalidArgument("tail_value: solution horizon does not match N");
  double t = 0.0;
  for (int n = h.N - h.Ntilde + 1; n <= h.N - 1; ++n) t += sol.stage_costs[n];
  return t;
}

double alpha_online(double V_NNt_xk, double V_NtNt_xs, double V_Ntm1_xs, double lambda0) {
  (void)V_NNt_xk;
  if (!(lambda0 > 0.0)) throw DegenerateState("alpha_online: lambda0 must be positive");
  return 1.0 - (V_NtNt_xs - V_Ntm1_xs) / lambda0;
}

DecayEstimate estimate_sigmas(const std::vector<double>& lambda, const HorizonPair& h, RateMode mode) {
  h.validate();
  if (static_cast<int>(lambda.size()) != h.N) throw InvalidArgument("estimate_sigmas: wrong number of stage costs");
  const int K = h.gap();
  const bool max_mode = mode == RateMode::MaxRates;
  auto pick = [&](std::optional<double>& acc, double v) {
    if (!acc) acc = v;
    else acc = max_mode ? std::max(*acc, v) : std::min(*acc, v);
  };

  DecayEstimate est;
  std::optional<double> first, second;
  if (K >= 1) {
    if (!(lambda[0] > 0.0)) throw DegenerateState("estimate_sigmas: lambda(0) is zero");
    for (int n = 1; n <= K; ++n) pick(first, std::pow(lambda[n] / lambda[0], 1.0 / n));
  }
  if (K + 1 <= h.N - 1) {
    if (!(lambda[K] > 0.0)) throw DegenerateState("estimate_sigmas: lambda(N-Ntilde) is zero");
    for (int n = K + 1; n <= h.N - 1; ++n) pick(second, std::pow(lambda[n] / lambda[K], 1.0 / (n + 1 - K)));
  }
  if (max_mode) {
    est.sigma1 = first;
    est.sigma2 = second;
  } else {
    est.sigma3 = first;
    est.sigma4 = second;
  }
  est.check_orderings();
  return est;
}

DecayEstimate estimate_sigmas(const OpenLoopSolution& sol, const HorizonPair& h, RateMode mode) {
  return estimate_sigmas(sol.stage_costs, h, mode);
}

double alpha_explicit(const HorizonPair& h, const DecayEstimate& est, double delta, bool allow_negative_delta) {
  h.validate_explicit();
  const double s1 = need(est.sigma1, "sigma1");
  const double s2 = need(est.sigma2, "sigma2");
  if (s1 < 0.0 || s2 < 0.0) throw InvalidArgument("alpha_explicit: negative decay rate");
  if (delta < 0.0 && !allow_negative_delta) throw Inapplicable("alpha_explicit: delta must be nonnegative");
  const double inner = delta * geometric_sum(s2, h.Ntilde) + std::pow(s2, h.Ntilde - 1);
  return 1.0 - est.C1 * est.C2 * std::pow(s1, h.gap()) * s2 * inner;
}

double delta_heuristic(double sigma1, double sigma2) {
  if (!(sigma2 > 0.0)) throw Inapplicable("delta heuristic needs sigma2 > 0");
  return sigma1 / sigma2 - 1.0;
}

double delta_prop4(double rho1, double rho2, double sigma2, int Ntilde) {
  if (rho1 < 0.0 || rho2 < 0.0) throw Inapplicable("delta bound needs rho1, rho2 >= 0");
  if (Ntilde < 2) throw InvalidArgument("delta bound needs Ntilde >= 2");
  if (sigma2 < 0.0) throw InvalidArgument("delta bound needs sigma2 >= 0");
  return (rho1 + sigma2 * rho2) / geometric_sum(sigma2, Ntilde);
}

double min_successor_cost(const ModelSpec& model, const Vector& x) {
  const int m = model.input_dim;
  if (m > 6) throw UnsupportedConfiguration("successor-cost minimization supports at most 6 inputs");
  const Vector& lo = model.input_lower;
  const Vector& hi = model.input_upper;
  auto cost = [&](const Vector& u) {
    return cost_extrema_over_inputs(model, model.dynamics(x, u), Extremum::Min);
  };

  constexpr int kPoints = 5;
  int total = 1;
  for (int i = 0; i < m; ++i) total *= kPoints;
  std::vector<std::pair<double, Vector>> starts;
  starts.reserve(static_cast<std::size_t>(total) + 1);
  Vector u(m);
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    for (int i = 0; i < m; ++i) {
      const int k = rem % kPoints;
      rem /= kPoints;
      u(i) = lo(i) + (hi(i) - lo(i)) * k / (kPoints - 1);
    }
    starts.emplace_back(cost(u), u);
  }
  starts.emplace_back(cost(model.cost.u_ref), model.cost.u_ref);
  std::stable_sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  double best = starts.front().first;
  const std::size_t refine = std::min<std::size_t>(3, starts.size());
  for (std::size_t s = 0; s < refine; ++s) {
    Vector v = starts[s].second;
    double fv = starts[s].first;
    double step = 0.25 * (hi - lo).maxCoeff();
    for (int it = 0; it < 200 && step > 1e-12; ++it) {
      Vector g(m);
      for (int i = 0; i < m; ++i) {
        const double h = 1e-7 * std::max(1.0, std::abs(v(i)));
        Vector vp = v, vm = v;
        vp(i) += h;
        vm(i) -= h;
        g(i) = (cost(vp) - cost(vm)) / (2.0 * h);
      }
      const double gn = g.lpNorm<Eigen::Infinity>();
      if (gn == 0.0) break;
      const Vector cand = (v - step * g / gn).cwiseMax(lo).cwiseMin(hi);
      const double fc = cost(cand);
      if (fc < fv) {
        v = cand;
        fv = fc;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    best = std::min(best, fv);
  }
  return best;
}

RatioTerms rho_terms(const ModelSpec& model, const Vector& x_s) {
  const double lmax = cost_extrema_over_inputs(model, x_s, Extremum::Max);
  const double lmin = cost_extrema_over_inputs(model, x_s, Extremum::Min);
  const double lsucc = min_successor_cost(model, x_s);
  if (!(lmin > 0.0) || !(lsucc > 0.0)) throw DegenerateState("rho terms: vanishing minimum cost");
  return {lmax / lmin - 1.0, lmax / lsucc - 1.0};
}

RatioTerms phi_terms(const ModelSpec& model, const Vector& x_p) {
  const double lmax = cost_extrema_over_inputs(model, x_p, Extremum::Max);
  const double lmin = cost_extrema_over_inputs(model, x_p, Extremum::Min);
  const double lsucc = min_successor_cost(model, x_p);
  if (!(lmin > 0.0) || !(lsucc > 0.0)) throw DegenerateState("phi terms: vanishing minimum cost");
  return {1.0 - lmax / lmin, 1.0 - lmax / lsucc};
}

int stability_horizon_gap(const DecayEstimate& est, double delta) {
  const double s1 = need(est.sigma1, "sigma1");
  const double s2 = need(est.sigma2, "sigma2");
  if (s1 >= 1.0) throw Inapplicable("stability gap needs sigma1 < 1");
  if (s2 >= 1.0) throw Inapplicable("stability gap needs sigma2 < 1");
  if (delta < 0.0) throw Inapplicable("stability gap needs delta >= 0");
  if (est.C1 * est.C2 < 1.0) throw Inapplicable("stability gap needs C1 C2 >= 1");
  if (s1 <= 0.0) return 0;
  const double num = std::log(est.C1 * est.C2 * (delta / (1.0 - s2) + 1.0));
  return std::max(0, ceil_ratio(num, std::log(1.0 / s1)));
}

double cl_upper_bound(const HorizonPair& h, const DecayEstimate& est, double alpha, double lmax) {
  h.validate();
  if (!(alpha > 0.0) || alpha > 1.0) throw Inapplicable("upper bound needs alpha in (0,1]");
  const double s1 = need(est.sigma1, "sigma1");
  const double s2 = need(est.sigma2, "sigma2");
  const int K = h.gap();
  const double bracket =
      geometric_sum(s1, K + 1) + est.C2 * std::pow(s1, K) * s2 * geometric_sum(s2, h.Ntilde - 1);
  return est.C1 * bracket * lmax / alpha;
}

double omega_online(double lambda0, double V_NtNt_xp, double V_Ntm1_xp) {
  if (!(lambda0 > 0.0)) throw DegenerateState("omega_online: lambda0 must be positive");
  return (V_NtNt_xp - V_Ntm1_xp) / lambda0;
}

double omega_explicit(const HorizonPair& h, const DecayEstimate& est, double nu, double kappa) {
  h.validate_explicit();
  const double s3 = need(est.sigma3, "sigma3");
  const double s4 = need(est.sigma4, "sigma4");
  if (s3 < 0.0 || s4 < 0.0) throw InvalidArgument("omega_explicit: negative decay rate");
  if (nu < 0.0 || kappa < 0.0) throw Inapplicable("omega_explicit: nu and kappa must be nonnegative");
  if (s4 == 0.0 || kappa == 0.0) return 0.0;
  const double inner = nu * geometric_sum(s4, h.Ntilde) + std::pow(s4, h.Ntilde - 1);
  return est.C3 * est.C4 * kappa * std::pow(s3, h.gap()) * s4 * inner;
}

double kappa_estimate(const ModelSpec& model, const Vector& x_k, const Vector& u0) {
  const double den = stage_cost(model, x_k, u0);
  if (!(den > 0.0)) throw DegenerateState("kappa: l(x_k, u0) vanishes");
  return model.cost(step(model, x_k, u0), model.cost.u_ref) / den;
}

double nu_heuristic(double sigma3, double sigma4) {
  if (!(sigma4 > 0.0)) throw Inapplicable("nu heuristic needs sigma4 > 0");
  return sigma3 / sigma4 - 1.0;
}

std::optional<double> nu_prop7(double phi1, double phi2, double C4, double sigma4, int Ntilde, std::string* reason) {
  if (phi1 < 0.0 || phi2 < 0.0) {
    if (reason) *reason = "prop7 inapplicable";
    return std::nullopt;
  }
  if (!(sigma4 > 0.0)) {
    if (reason) *reason = "prop7 needs sigma4 > 0";
    return std::nullopt;
  }
  if (Ntilde < 2) throw InvalidArgument("nu bound needs Ntilde >= 2");
  return (phi1 + C4 * sigma4 * sigma4 * phi2) / sigma4 / geometric_sum(sigma4, Ntilde);
}

int omega_horizon_gap(const DecayEstimate& est, double kappa, double delta, double nu) {
  const double s4 = need(est.sigma4, "sigma4");
  if (s4 == 0.0 || kappa == 0.0) return 0;
  const double s1 = need(est.sigma1, "sigma1");
  const double s2 = need(est.sigma2, "sigma2");
  const double s3 = need(est.sigma3, "sigma3");
  if (!(s1 > s3)) throw Inapplicable("omega gap needs sigma1 > sigma3");
  if (s2 < s4) throw Inapplicable("omega gap needs sigma2 >= sigma4");
  if (delta < nu) throw Inapplicable("omega gap with delta < nu only has an implicit form");
  const double num = std::log(est.C3 * est.C4 * kappa / (est.C1 * est.C2));
  return std::max(0, ceil_ratio(num, std::log(s1 / s3)));
}

double cl_lower_bound(const HorizonPair& h, const DecayEstimate& est, double omega, double kappa, double lmin) {
  h.validate();
  if (omega >= 1.0) throw Inapplicable("lower bound needs omega < 1");
  const double s3 = need(est.sigma3, "sigma3");
  const double s4 = need(est.sigma4, "sigma4");
  const int K = h.gap();
  const double bracket =
      geometric_sum(s3, K + 1) + est.C4 * std::pow(s3, K) * s4 * geometric_sum(s4, h.Ntilde - 1);
  return est.C3 * kappa * bracket * lmin / (1.0 - omega);
}

SandwichResult sandwich_interval(double V, double alpha, double omega) {
  SandwichResult r;
  if (!(alpha > 0.0) || alpha > 1.0) {
    r.reason = "alpha outside (0,1]";
    return r;
  }
  if (omega < 0.0) {
    r.reason = "omega negative";
    return r;
  }
  if (omega > 1.0 - alpha) {
    r.reason = "omega exceeds 1 - alpha";
    return r;
  }
  r.interval = Interval{V / (1.0 - omega), V / alpha};
  return r;
}

double lcss_beta(const std::vector<double>& values, const std::vector<double>& first_costs) {
  if (values.size() < 2 || first_costs.size() != values.size() - 1)
    throw InvalidArgument("lcss_beta: need values for n = Nt..N and one first-stage cost per n > Nt");
  if (!(values[0] > 0.0)) throw DegenerateState("lcss_beta: V_Nt^Nt vanishes");
  double ratio = values[1] / values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(first_costs[i - 1] > 0.0)) throw DegenerateState("lcss_beta: vanishing stage cost");
    ratio = std::max(ratio, values[i] / first_costs[i - 1]);
  }
  return std::max(0.0, ratio - 1.0);
}

double alpha_lcss(double beta, const HorizonPair& h) {
  h.validate();
  if (beta < 0.0) throw InvalidArgument("alpha_lcss: beta must be nonnegative");
  const int K = h.gap();
  return 1.0 - std::pow(beta, K + 1) / std::pow(beta + 1.0, K - 1);
}

const char* to_string(Provenance p) { return p == Provenance::X0Only ? "x0" : "trajectory"; }
const char* to_string(DeltaMethod d) { return d == DeltaMethod::Heuristic ? "heuristic" : "prop4"; }
const char* to_string(NuMethod n) { return n == NuMethod::Heuristic ? "heuristic" : "prop7"; }

Comparison compare_horizons(const BoundReport& r1, const BoundReport& r2) {
  Comparison c;
  if (r1.horizons.N != r2.horizons.N) {
    c.reason = "different prediction horizons";
    return c;
  }
  if (r2.horizons.Ntilde < r1.horizons.Ntilde) {
    c.reason = "second report must have the larger constraint horizon";
    return c;
  }
  const auto& i1 = r1.interval_online ? r1.interval_online : r1.interval_explicit;
  const auto& i2 = r2.interval_online ? r2.interval_online : r2.interval_explicit;
  if (!i1 || !i2) {
    c.reason = "a report has no applicable interval";
    return c;
  }
  if (i1->upper <= i2->lower) {
    c.verdict = Verdict::SecondWorse;
    c.reason = "upper bound of the first does not exceed lower bound of the second";
  } else {
    c.reason = "sufficient condition not met";
  }
  return c;
}

bool RdpResult::all_alpha() const { return std::all_of(alpha_pass.begin(), alpha_pass.end(), [](bool b) { return b; }); }
bool RdpResult::all_omega() const { return std::all_of(omega_pass.begin(), omega_pass.end(), [](bool b) { return b; }); }

RdpResult rdp_check(const ClosedLoopRun& run, double alpha, std::optional<double> omega) {
  RdpResult r;
  for (std::size_t k = 0; k + 1 < run.steps.size(); ++k) {
    const double Vk = run.steps[k].solution.value;
    const double Vn = run.steps[k + 1].solution.value;
    const double l = run.steps[k].stage_cost;
    const double tol = 1e-8 * std::max(1.0, Vk);
    r.alpha_pass.push_back(Vk >= Vn + alpha * l - tol);
    if (omega) {
      const bool ok = *omega < 1.0 && alpha * l >= alpha / (1.0 - *omega) * (Vk - Vn) - tol;
      r.omega_pass.push_back(ok);
    }
  }
  return r;
}

RdpResult rdp_check(const ClosedLoopRun& run, const std::vector<std::optional<double>>& alphas) {
  RdpResult r;
  for (std::size_t k = 0; k + 1 < run.steps.size(); ++k) {
    if (k >= alphas.size() || !alphas[k]) {
      r.alpha_pass.push_back(true);
      continue;
    }
    const double Vk = run.steps[k].solution.value;
    const double Vn = run.steps[k + 1].solution.value;
    const double l = run.steps[k].stage_cost;
    const double tol = 1e-8 * std::max(1.0, Vk);
    r.alpha_pass.push_back(Vk >= Vn + *alphas[k] * l - tol);
  }
  return r;
}

}  // namespace hcmpc
