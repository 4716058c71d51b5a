#pragma once

#include "hcmpc/closed_loop.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hcmpc {

/// Decay-rate estimates of the optimal stage costs.
///
/// sigma1/sigma2 are the maximum rates (upper bounds), sigma3/sigma4 the minimum
/// rates (lower bounds). The C constants are 1 under the estimation convention
/// used here; the explicit formulas accept any values.
struct DecayEstimate {
  double C1 = 1.0, C2 = 1.0, C3 = 1.0, C4 = 1.0;
  std::optional<double> sigma1, sigma2, sigma3, sigma4;
  std::string method = "stage_cost_ratios";
  bool valid = true;
  std::vector<std::string> violations;

  /// Flags (never repairs) violations of 1 > s1 > s2 >= 0, s1 >= s3 > s4 >= 0, s2 >= s4.
  void check_orderings();
};

enum class RateMode { MaxRates, MinRates };

/// (1 - s^k) / (1 - s), with the limit k at s = 1.
[[nodiscard]] double geometric_sum(double s, int k);

/// sum_{n=N-Nt+1}^{N-1} lambda(n).
[[nodiscard]] double tail_value(const OpenLoopSolution& sol, const HorizonPair& h);

[[nodiscard]] double alpha_online(double V_NNt_xk, double V_NtNt_xs, double V_Ntm1_xs, double lambda0);

/// Rates from one HC solution. MaxRates fills sigma1/sigma2, MinRates fills sigma3/sigma4.
[[nodiscard]] DecayEstimate estimate_sigmas(const std::vector<double>& lambda, const HorizonPair& h, RateMode mode);
[[nodiscard]] DecayEstimate estimate_sigmas(const OpenLoopSolution& sol, const HorizonPair& h, RateMode mode);

/// 1 - C1 C2 s1^{N-Nt} s2 (delta (1-s2^Nt)/(1-s2) + s2^{Nt-1}).
/// A negative delta is rejected unless `allow_negative_delta`.
[[nodiscard]] double alpha_explicit(const HorizonPair& h, const DecayEstimate& est, double delta,
                                   bool allow_negative_delta = false);

[[nodiscard]] double delta_heuristic(double sigma1, double sigma2);
[[nodiscard]] double delta_prop4(double rho1, double rho2, double sigma2, int Ntilde);

struct RatioTerms {
  double first = 0.0;   ///< rho1 or phi1
  double second = 0.0;  ///< rho2 or phi2
};

/// min over u1 of min_u2 l(f(x, u1), u2), by a 5^m input-grid multi-start with
/// projected-gradient refinement.
[[nodiscard]] double min_successor_cost(const ModelSpec& model, const Vector& x);

/// rho1 = max_u l(x,u)/min_u l(x,u) - 1, rho2 = max_u l(x,u)/min_{u1,u2} l(f(x,u1),u2) - 1.
[[nodiscard]] RatioTerms rho_terms(const ModelSpec& model, const Vector& x_s);
/// phi1 = 1 - max_u l/min_u l, phi2 = 1 - max_u l/min_{u1,u2} l(f(x,u1),u2).
[[nodiscard]] RatioTerms phi_terms(const ModelSpec& model, const Vector& x_p);

/// Smallest N-Nt+1 satisfying the stability condition (0 if always satisfied).
[[nodiscard]] int stability_horizon_gap(const DecayEstimate& est, double delta);

[[nodiscard]] double cl_upper_bound(const HorizonPair& h, const DecayEstimate& est, double alpha, double lmax);

[[nodiscard]] double omega_online(double lambda0, double V_NtNt_xp, double V_Ntm1_xp);

/// C3 C4 kappa s3^{N-Nt} s4 (nu (1-s4^Nt)/(1-s4) + s4^{Nt-1}).
[[nodiscard]] double omega_explicit(const HorizonPair& h, const DecayEstimate& est, double nu, double kappa);

/// l(f(x_k, u0), u_ref) / l(x_k, u0).
[[nodiscard]] double kappa_estimate(const ModelSpec& model, const Vector& x_k, const Vector& u0);

[[nodiscard]] double nu_heuristic(double sigma3, double sigma4);

/// Empty (with `reason` set) when phi1 or phi2 is negative.
[[nodiscard]] std::optional<double> nu_prop7(double phi1, double phi2, double C4, double sigma4, int Ntilde,
                                             std::string* reason = nullptr);

/// Smallest N-Nt for which 0 <= omega <= 1 - alpha is guaranteed.
[[nodiscard]] int omega_horizon_gap(const DecayEstimate& est, double kappa, double delta, double nu);

[[nodiscard]] double cl_lower_bound(const HorizonPair& h, const DecayEstimate& est, double omega, double kappa,
                                    double lmin);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct SandwichResult {
  std::optional<Interval> interval;
  std::string reason;
};

/// [V/(1-omega), V/alpha] when alpha in (0,1] and omega in [0, 1-alpha].
[[nodiscard]] SandwichResult sandwich_interval(double V, double alpha, double omega);

/// beta from the LCSS conditions: max(0, max_i ratio_i - 1).
/// values[i] = V_{Nt+i}^{Nt}(x_k) for i = 0..N-Nt; first_costs[i] = l(x_k, u*(N-n|x_k)) for n = Nt+1..N.
[[nodiscard]] double lcss_beta(const std::vector<double>& values, const std::vector<double>& first_costs);
/// 1 - beta^{N-Nt+1} / (beta+1)^{N-Nt-1}.
[[nodiscard]] double alpha_lcss(double beta, const HorizonPair& h);

enum class Provenance { X0Only, FullTrajectory };
enum class DeltaMethod { Heuristic, Prop4 };
enum class NuMethod { Heuristic, Prop7 };

[[nodiscard]] const char* to_string(Provenance p);
[[nodiscard]] const char* to_string(DeltaMethod d);
[[nodiscard]] const char* to_string(NuMethod n);

struct BoundReport {
  HorizonPair horizons;
  Provenance provenance = Provenance::X0Only;
  DeltaMethod delta_method = DeltaMethod::Heuristic;
  NuMethod nu_method = NuMethod::Heuristic;

  double V = 0.0;        ///< V_N^Nt(x0)
  double lambda0 = 0.0;  ///< l(x0, u*(0|x0))
  double lmax = 0.0;     ///< max_u l(x0, u)
  double lmin = 0.0;     ///< min_u l(x0, u)
  DecayEstimate est;

  std::optional<double> alpha_online, omega_online;
  std::optional<double> delta, nu, kappa;
  std::optional<double> alpha_explicit, omega_explicit;
  std::optional<double> beta, alpha_lcss;
  std::optional<int> stability_gap, omega_gap;
  std::optional<double> upper_prop2, lower_prop5;

  bool alpha_applicable = false;  ///< online alpha in (0,1]
  bool omega_applicable = false;  ///< online omega in [0, 1-alpha]
  std::optional<Interval> interval_online;
  std::optional<Interval> interval_explicit;
  std::vector<std::string> notes;
};

enum class Verdict { SecondWorse, Inconclusive };

struct Comparison {
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
};

/// Nt2 >= Nt1 is decidedly worse iff V1/alpha1 <= V2/(1-omega2). Uses the online
/// intervals, falling back to the explicit ones.
[[nodiscard]] Comparison compare_horizons(const BoundReport& r1, const BoundReport& r2);

struct RdpResult {
  std::vector<bool> alpha_pass;
  std::vector<bool> omega_pass;
  [[nodiscard]] bool all_alpha() const;
  [[nodiscard]] bool all_omega() const;
};

/// Checks V(x_k) >= V(x_{k+1}) + alpha l_k and alpha l_k >= alpha/(1-omega) (V(x_k) - V(x_{k+1}))
/// on every consecutive pair of recorded steps, tol = 1e-8 max(1, V(x_k)).
[[nodiscard]] RdpResult rdp_check(const ClosedLoopRun& run, double alpha, std::optional<double> omega = {});
/// Same with one alpha per step (entries may be absent, which counts as a pass).
[[nodiscard]] RdpResult rdp_check(const ClosedLoopRun& run, const std::vector<std::optional<double>>& alphas);

}  // namespace hcmpc
