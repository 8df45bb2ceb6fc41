#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sustain5g/errors.hpp"
#include "sustain5g/numerics.hpp"

namespace sustain5g {

// The signaling-overhead window factor admits two readings; see
// signaling_overhead below. IntegralForm is the default.
enum class OverheadInterpretation { IntegralForm, PrintedForm };

struct NetworkConfig {
  std::uint32_t n_devices = 10;          // N, devices per entity
  std::uint32_t n_entities = 10;         // E
  std::uint32_t reachable_hops_inv = 5;  // n^-1, reachable subset size
  std::uint32_t passes = 1;              // Q, handshake passes per (re)auth
  double update_rate = 1.0;              // alpha, key updates per unit time
  double arrival_rate = 2.0;             // beta, vehicle arrivals per unit time
  RealInterval window{5.0, 105.0};       // [t1, t2], evaluation window
  double initial_auth_overhead = 1.0;    // O_b, cost charged on first attach
  double sustainability_threshold = 0.5;   // S_N^TH
  double overhead_threshold = 10.0;        // M_O^TH
  OverheadInterpretation interpretation = OverheadInterpretation::IntegralForm;
  // Reference time fixing alpha' = alpha / t; defaults to window.lo.
  std::optional<double> alpha_prime_time;
};

// Returns every violated config invariant as an ASCII clause, in a stable
// order. Empty result means the config is admissible.
inline std::vector<std::string> invariant_violations(const NetworkConfig& c) {
  std::vector<std::string> out;
  if (c.n_devices < 1) out.push_back("N >= 1");
  if (c.n_entities < 1) out.push_back("E >= 1");
  if (c.passes < 1) out.push_back("Q >= 1");
  if (c.reachable_hops_inv < 2) out.push_back("n^-1 >= 2");
  if (!(c.update_rate > 0.0)) out.push_back("alpha > 0");
  if (!(c.arrival_rate > 0.0)) out.push_back("beta > 0");
  if (!(c.arrival_rate - c.update_rate > 0.0)) out.push_back("beta - alpha > 0");
  if (c.reachable_hops_inv == c.n_entities) out.push_back("n^-1 != E");
  if (!(static_cast<double>(c.n_entities) - c.reachable_hops_inv > 0.0))
    out.push_back("E - n^-1 > 0");
  if (!(c.window.lo > 0.0)) out.push_back("t1 > 0");
  if (!(c.initial_auth_overhead > 0.0)) out.push_back("O_b > 0");
  if (!(c.sustainability_threshold > 0.0)) out.push_back("S_N^TH > 0");
  if (!(c.overhead_threshold > 0.0)) out.push_back("M_O^TH > 0");
  if (c.alpha_prime_time && !(*c.alpha_prime_time > 0.0))
    out.push_back("alpha' reference time > 0");
  return out;
}

inline std::string join_clauses(const std::vector<std::string>& clauses) {
  std::string s;
  for (const auto& c : clauses) {
    if (!s.empty()) s += "; ";
    s += c;
  }
  return s;
}

inline void validate(const NetworkConfig& c) {
  const auto bad = invariant_violations(c);
  if (!bad.empty())
    throw config_error("invalid network config: " + join_clauses(bad));
}

struct OptimizationConstraints {
  double attack_time = 120.0;       // t, expected time to compromise
  double safe_time = 60.0;          // t', window considered safe
  double utilization_time = 30.0;   // t_u, key utilization target
  std::uint64_t min_updates = 0;    // U'_N, required update count
  double safety_margin = 1.0;       // epsilon backed off from t'
};

// ---------------------------------------------------------------------------
// Probability layer

// P = (1 - n^-1/E)^N : probability a vehicle attaches outside the
// reachable subset on every one of N tries.
inline double connectivity_loss_probability(const NetworkConfig& cfg) {
  validate(cfg);
  const double ratio =
      static_cast<double>(cfg.reachable_hops_inv) / cfg.n_entities;
  return std::pow(1.0 - ratio, static_cast<double>(cfg.n_devices));
}

// Poisson pmf at X = 2 with lambda = alpha/t: e^-lambda lambda^2 / 2.
inline double key_update_pmf(double alpha, double t) {
  if (!(t > 0.0)) throw std::domain_error("key_update_pmf: requires t > 0");
  if (!(alpha >= 0.0))
    throw std::domain_error("key_update_pmf: requires alpha >= 0");
  const double lambda = alpha / t;
  return std::exp(-lambda) * lambda * lambda / 2.0;
}

// Poisson pmf at X' = 1 with lambda = beta/t: e^-lambda lambda.
inline double vehicle_pmf(double beta, double t) {
  if (!(t > 0.0)) throw std::domain_error("vehicle_pmf: requires t > 0");
  if (!(beta >= 0.0))
    throw std::domain_error("vehicle_pmf: requires beta >= 0");
  const double lambda = beta / t;
  return std::exp(-lambda) * lambda;
}

// Expected vehicle count under an arbitrary density over its support.
struct DensityProfile {
  std::function<double(double)> density;
  RealInterval support;
};

inline double vehicle_count_density(const DensityProfile& profile,
                                    double tol = 1e-10) {
  return integrate_adaptive(profile.density, profile.support, tol).value;
}

// ---------------------------------------------------------------------------
// Sustainability layer

namespace detail {

inline double loss_probability_unchecked(const NetworkConfig& c) {
  const double ratio =
      static_cast<double>(c.reachable_hops_inv) / c.n_entities;
  return std::pow(1.0 - ratio, static_cast<double>(c.n_devices));
}

}  // namespace detail

// Closed form over [t1, t2]:
//   S_N = alpha^2 / (2 beta N P Q) * (Ei((beta-alpha)/t1) - Ei((beta-alpha)/t2))
inline double sustainability_closed_form(const NetworkConfig& cfg) {
  validate(cfg);
  const double a = cfg.update_rate;
  const double b = cfg.arrival_rate;
  const double c = b - a;
  const double p = detail::loss_probability_unchecked(cfg);
  const double pre = a * a /
                     (2.0 * b * cfg.n_devices * p * cfg.passes);
  return pre * (exp_integral_ei(c / cfg.window.lo) -
                exp_integral_ei(c / cfg.window.hi));
}

// Same quantity via adaptive quadrature of the literal pmf ratio
//   integrand(t) = key_update_pmf(alpha, t) / vehicle_pmf(beta, t)
// scaled by 1/(N P Q). Kept deliberately close to the defining ratio so it
// cross-checks the closed form along an unrelated path.
inline double sustainability_quadrature(const NetworkConfig& cfg,
                                        double tol = 1e-10) {
  validate(cfg);
  const double a = cfg.update_rate;
  const double b = cfg.arrival_rate;
  auto integrand = [a, b](double t) {
    return key_update_pmf(a, t) / vehicle_pmf(b, t);
  };
  const double p = detail::loss_probability_unchecked(cfg);
  const double scale = 1.0 / (cfg.n_devices * p * cfg.passes);
  return scale * integrate_adaptive(integrand, cfg.window, tol).value;
}

// Large-t limit of the pmf ratio: alpha/beta per unit time.
inline double sustainability_asymptotic(const NetworkConfig& cfg) {
  validate(cfg);
  return cfg.update_rate / cfg.arrival_rate;
}

struct SustainabilityReport {
  double closed_form;
  double quadrature;
  double asymptotic;
  double relative_gap;  // |closed - quad| / max(|closed|, tiny)
};

inline SustainabilityReport sustainability_report(const NetworkConfig& cfg,
                                                  double tol = 1e-10) {
  SustainabilityReport r{};
  r.closed_form = sustainability_closed_form(cfg);
  r.quadrature = sustainability_quadrature(cfg, tol);
  r.asymptotic = sustainability_asymptotic(cfg);
  r.relative_gap = std::fabs(r.closed_form - r.quadrature) /
                   std::max(std::fabs(r.closed_form), 1e-300);
  return r;
}

// ---------------------------------------------------------------------------
// Overhead layer

namespace detail {

inline double alpha_prime(const NetworkConfig& cfg) {
  const double t_ref = cfg.alpha_prime_time.value_or(cfg.window.lo);
  const double ap = cfg.update_rate / t_ref;
  if (!(ap > 0.0 && ap < 1.0))
    throw std::domain_error(
        "signaling overhead: alpha' = alpha/t must lie in (0,1)");
  return ap;
}

inline double overhead_prefactor(const NetworkConfig& cfg) {
  const double ratio =
      static_cast<double>(cfg.reachable_hops_inv) / cfg.n_entities;
  const double n = static_cast<double>(cfg.n_devices);
  return cfg.initial_auth_overhead * std::pow(ratio, n) /
         (cfg.n_entities * std::pow(1.0 - ratio, n));
}

// Window factor between times lo and hi under the chosen interpretation.
inline double overhead_window_factor(const NetworkConfig& cfg, double lo,
                                     double hi,
                                     OverheadInterpretation form) {
  if (form == OverheadInterpretation::PrintedForm) return hi - lo;
  const double ap = alpha_prime(cfg);
  const double base = 1.0 - ap;
  return (std::pow(base, hi) - std::pow(base, lo)) / std::log(base);
}

}  // namespace detail

// O_S: expected signaling overhead across the window. The IntegralForm
// resolves the window factor as the integral of (1-alpha')^t over [t1, t2],
// i.e. ((1-alpha')^t2 - (1-alpha')^t1)/ln(1-alpha'); the PrintedForm keeps
// the bare factor (t2 - t1). Requires alpha' = alpha/t_ref in (0,1) for the
// integral form; throws std::domain_error otherwise.
inline double signaling_overhead(
    const NetworkConfig& cfg,
    std::optional<OverheadInterpretation> form = std::nullopt) {
  validate(cfg);
  const OverheadInterpretation f = form.value_or(cfg.interpretation);
  return detail::overhead_prefactor(cfg) *
         detail::overhead_window_factor(cfg, cfg.window.lo, cfg.window.hi, f);
}

// M_O = O_S (1 - P) / (E P).
inline double message_overhead(
    const NetworkConfig& cfg,
    std::optional<OverheadInterpretation> form = std::nullopt) {
  const double os = signaling_overhead(cfg, form);
  const double p = detail::loss_probability_unchecked(cfg);
  return os * (1.0 - p) / (cfg.n_entities * p);
}

// ---------------------------------------------------------------------------
// Fail-safe layer

enum class FailSafeCriterion { SustainabilityRate, MessageOverhead };

// Instantaneous sustainability rate
//   s(tau) = alpha^2 e^{(beta-alpha)/tau} / (2 beta tau N P Q),
// the integrand of S_N including its 1/(NPQ) scale. Strictly decreasing in
// tau whenever beta > alpha.
inline double instantaneous_sustainability_rate(const NetworkConfig& cfg,
                                                double tau) {
  if (!(tau > 0.0))
    throw std::domain_error("sustainability rate: requires tau > 0");
  const double a = cfg.update_rate;
  const double b = cfg.arrival_rate;
  const double p = detail::loss_probability_unchecked(cfg);
  return a * a * std::exp((b - a) / tau) /
         (2.0 * b * tau * cfg.n_devices * p * cfg.passes);
}

// Cumulative message overhead accrued from t1 up to t (<= t2); zero at t1
// and nondecreasing in t under either interpretation.
inline double cumulative_message_overhead(
    const NetworkConfig& cfg, double t,
    std::optional<OverheadInterpretation> form = std::nullopt) {
  if (!(t >= cfg.window.lo && t <= cfg.window.hi))
    throw std::domain_error(
        "cumulative overhead: t must lie within [t1, t2]");
  const OverheadInterpretation f = form.value_or(cfg.interpretation);
  if (t == cfg.window.lo) return 0.0;
  const double os =
      detail::overhead_prefactor(cfg) *
      detail::overhead_window_factor(cfg, cfg.window.lo, t, f);
  const double p = detail::loss_probability_unchecked(cfg);
  return os * (1.0 - p) / (cfg.n_entities * p);
}

struct FailSafeReport {
  FailSafeCriterion criterion;
  double threshold;
  // Largest t in [t1, t2] up to which the criterion holds everywhere;
  // empty when it already fails at t1.
  std::optional<double> fail_safe_time;
  // Grid trace (t, criterion value) used for the scan.
  std::vector<std::pair<double, double>> scan_points;
};

// Locates the fail-safe point F_S by a grid scan followed by bisection to
// 1e-3 time units. SustainabilityRate holds while s(tau) >= S_N^TH (rate
// still above threshold); MessageOverhead holds while the cumulative
// overhead stays <= M_O^TH.
inline FailSafeReport failsafe_point(const NetworkConfig& cfg,
                                     FailSafeCriterion criterion,
                                     std::size_t grid_points = 129) {
  validate(cfg);
  if (grid_points < 2) throw config_error("failsafe grid needs >= 2 points");

  const double th = criterion == FailSafeCriterion::SustainabilityRate
                        ? cfg.sustainability_threshold
                        : cfg.overhead_threshold;
  auto value_at = [&](double t) {
    return criterion == FailSafeCriterion::SustainabilityRate
               ? instantaneous_sustainability_rate(cfg, t)
               : cumulative_message_overhead(cfg, t);
  };
  auto holds = [&](double v) {
    return criterion == FailSafeCriterion::SustainabilityRate ? v >= th
                                                              : v <= th;
  };

  FailSafeReport report{criterion, th, std::nullopt, {}};
  const double t1 = cfg.window.lo;
  const double t2 = cfg.window.hi;
  report.scan_points.reserve(grid_points);

  std::size_t first_violation = grid_points;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double t =
        t1 + (t2 - t1) * static_cast<double>(i) / (grid_points - 1);
    const double v = value_at(t);
    report.scan_points.emplace_back(t, v);
    if (first_violation == grid_points && !holds(v)) first_violation = i;
  }

  if (first_violation == 0) return report;  // fails already at t1
  if (first_violation == grid_points) {
    report.fail_safe_time = t2;
    return report;
  }

  double lo = report.scan_points[first_violation - 1].first;
  double hi = report.scan_points[first_violation].first;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (holds(value_at(mid)))
      lo = mid;
    else
      hi = mid;
  }
  report.fail_safe_time = lo;
  return report;
}

// ---------------------------------------------------------------------------
// Feasibility layer

// Evaluates the optimization-side clauses. Returns each violated clause
// verbatim; an empty result means feasible. The observed update count and
// the device-window estimate D may be omitted when unknown: their clauses
// are then skipped (D defaults to beta*t1 clipped to [0, N]).
inline std::vector<std::string> check_feasibility(
    const NetworkConfig& cfg, const OptimizationConstraints& opt,
    std::optional<std::uint64_t> observed_updates = std::nullopt,
    std::optional<double> d_override = std::nullopt) {
  std::vector<std::string> out;

  const double d = d_override.value_or(
      std::min(cfg.arrival_rate * cfg.window.lo,
               static_cast<double>(cfg.n_devices)));
  if (!(d > 0.0)) out.push_back("0 < D");
  if (!(d <= static_cast<double>(cfg.n_devices))) out.push_back("D <= N");

  if (observed_updates && !(*observed_updates >= opt.min_updates))
    out.push_back("U_N >= U'_N");

  const double ninv = cfg.reachable_hops_inv;
  const double e = cfg.n_entities;
  const double pairs = ninv * (ninv - 1.0) / 2.0;
  if (!(pairs > 0.0)) out.push_back("0 < n^-1(n^-1-1)/2");
  if (!(pairs <= e * (e - 1.0) / 2.0))
    out.push_back("n^-1(n^-1-1)/2 <= E(E-1)/2");
  if (cfg.reachable_hops_inv == cfg.n_entities) out.push_back("n^-1 != E");

  if (!(opt.utilization_time < opt.safe_time)) out.push_back("t_u < t'");
  if (!(opt.safe_time <= opt.attack_time)) out.push_back("t' <= t");
  return out;
}

// Largest admissible key-utilization window: min(F_S, t' - epsilon).
// Requires a fail-safe point; a report without one means the config is not
// sustainable even at t1 and no window exists.
inline double key_utilization_window(const OptimizationConstraints& opt,
                                     const FailSafeReport& fs) {
  if (!(opt.safety_margin > 0.0))
    throw config_error("invalid constraints: safety_margin > 0");
  if (!(opt.safe_time > opt.safety_margin))
    throw config_error("invalid constraints: t' > epsilon");
  if (!fs.fail_safe_time)
    throw config_error(
        "no utilization window: criterion already fails at t1");
  return std::min(*fs.fail_safe_time, opt.safe_time - opt.safety_margin);
}

}  // namespace sustain5g
