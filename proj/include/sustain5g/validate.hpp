#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "sustain5g/model.hpp"
#include "sustain5g/numerics.hpp"
#include "sustain5g/oracle.hpp"
#include "sustain5g/sweep.hpp"

namespace sustain5g::validation {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
};

namespace detail {

inline double max_rel_err_ei(double lo, double hi, int points, bool negate) {
  double worst = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double mag = lo * std::pow(hi / lo, double(i) / points);
    const double x = negate ? -mag : mag;
    const double got = exp_integral_ei(x);
    const double ref = oracle::ei_reference(x);
    worst = std::max(worst, std::fabs(got - ref) / std::fabs(ref));
  }
  return worst;
}

}  // namespace detail

inline void run_ei_suite(std::vector<CheckResult>& out, double tol) {
  auto add = [&](const std::string& name, double measured, double tolerance) {
    out.push_back({"ei", name, measured <= tolerance, measured, tolerance});
  };
  add("log-spaced positive [1e-3,30]",
      detail::max_rel_err_ei(1e-3, 30.0, 2000, false), tol);
  add("log-spaced negative [-30,-1e-3]",
      detail::max_rel_err_ei(1e-3, 30.0, 2000, true), tol);
  add("far positive (30,700]", detail::max_rel_err_ei(30.0, 700.0, 400, false),
      tol);
  add("far negative [-700,-30)",
      detail::max_rel_err_ei(30.0, 700.0, 400, true), tol);

  const double s40 = sustain5g::detail::ei_power_series(40.0);
  const double a40 = sustain5g::detail::ei_asymptotic(40.0);
  add("series/asymptotic seam at x=40",
      std::fabs(s40 - a40) / std::fabs(a40), 1e-10);
  const double s6 = sustain5g::detail::ei_power_series(-6.0);
  const double c6 = -sustain5g::detail::e1_continued_fraction(6.0);
  add("series/continued-fraction seam at x=-6",
      std::fabs(s6 - c6) / std::fabs(c6), 1e-10);
}

inline void run_quadrature_suite(std::vector<CheckResult>& out) {
  auto add = [&](const std::string& name, double measured, double tolerance) {
    out.push_back(
        {"quadrature", name, measured <= tolerance, measured, tolerance});
  };

  const auto p1 = integrate_adaptive([](double t) { return t * t; },
                                     RealInterval{0, 1}, 1e-12);
  add("polynomial x^2 over [0,1]", std::fabs(p1.value - 1.0 / 3.0), 1e-12);

  const auto p2 = integrate_adaptive([](double t) { return std::sin(t); },
                                     RealInterval{0, 3.14159265358979323846},
                                     1e-12);
  add("sin over [0,pi]", std::fabs(p2.value - 2.0), 1e-11);

  const auto p3 = integrate_adaptive(
      [](double t) { return std::exp(-t * t); }, RealInterval{-8, 8}, 1e-13);
  add("gaussian over [-8,8]",
      std::fabs(p3.value - 1.7724538509055160273), 1e-11);

  const double w = 1e-3;
  const auto p4 = integrate_adaptive(
      [w](double t) {
        return 1.0 / (w * w + (t - 0.3) * (t - 0.3));
      },
      RealInterval{0, 1}, 1e-10);
  const double ref = (std::atan(0.7 / w) + std::atan(0.3 / w)) / w;
  add("narrow lorentzian spike", std::fabs(p4.value - ref) / ref, 1e-9);

  // Halving the tolerance from 1e-2 down to 1e-10 must never increase the
  // true error of the gaussian integral.
  double prev_err = 1e300;
  bool monotone = true;
  for (double tol = 1e-2; tol >= 1e-10; tol *= 0.5) {
    const auto r = integrate_adaptive(
        [](double t) { return std::exp(-t * t); }, RealInterval{-8, 8}, tol);
    const double err = std::fabs(r.value - 1.7724538509055160273);
    if (err > prev_err + 1e-15) monotone = false;
    prev_err = std::min(prev_err, err);
  }
  out.push_back({"quadrature", "error shrinks as tolerance tightens",
                 monotone, monotone ? 0.0 : 1.0, 0.0});
}

inline void run_closed_form_suite(std::vector<CheckResult>& out) {
  NetworkConfig base;
  SweepSpec spec;
  double worst = 0.0;
  int feasible = 0;
  for (const auto& row : run_sweep(base, spec)) {
    if (!row.feasible) continue;
    ++feasible;
    const double gap = std::fabs(*row.s_n_closed - *row.s_n_quadrature) /
                       std::fabs(*row.s_n_closed);
    worst = std::max(worst, gap);
  }
  out.push_back({"closed-form",
                 "closed vs quadrature over " + std::to_string(feasible) +
                     " grid combinations",
                 worst <= 1e-6 && feasible == 125, worst, 1e-6});
}

inline void run_overhead_suite(std::vector<CheckResult>& out) {
  // Reference composition: prefactor times the directly integrated window
  // factor integral of (1-alpha')^t over [t1, t2].
  auto cross_check = [&](NetworkConfig cfg, const std::string& name) {
    const double got = signaling_overhead(cfg);
    const double t_ref = cfg.alpha_prime_time.value_or(cfg.window.lo);
    const double ap = cfg.update_rate / t_ref;
    const double pre =
        cfg.initial_auth_overhead *
        std::pow(double(cfg.reachable_hops_inv) / cfg.n_entities,
                 double(cfg.n_devices)) /
        (cfg.n_entities *
         std::pow(1.0 - double(cfg.reachable_hops_inv) / cfg.n_entities,
                  double(cfg.n_devices)));
    const double ref =
        pre * integrate_adaptive(
                  [ap](double t) { return std::pow(1.0 - ap, t); },
                  cfg.window, 1e-12)
                  .value;
    out.push_back({"overhead", name,
                   std::fabs(got - ref) / std::fabs(ref) <= 1e-8,
                   std::fabs(got - ref) / std::fabs(ref), 1e-8});
  };

  NetworkConfig half;  // alpha' pinned to 0.5
  half.alpha_prime_time = 2.0;
  cross_check(half, "integral form matches direct quadrature (alpha'=0.5)");

  NetworkConfig deflt;
  cross_check(deflt, "integral form matches direct quadrature (alpha'=0.2)");

  // M_O composition identity.
  NetworkConfig cfg;
  const double mo = message_overhead(cfg);
  const double p = connectivity_loss_probability(cfg);
  const double ref = signaling_overhead(cfg) * (1.0 - p) /
                     (cfg.n_entities * p);
  out.push_back({"overhead", "M_O composes O_S with (1-P)/(EP)",
                 std::fabs(mo - ref) <= 1e-15 * std::fabs(ref),
                 std::fabs(mo - ref), 1e-15 * std::fabs(ref)});
}

// Runs the requested suites ("" = all). ei_tol tightens or loosens the Ei
// comparison tolerance.
inline std::vector<CheckResult> run_validation(const std::string& only = "",
                                               double ei_tol = 1e-9) {
  std::vector<CheckResult> out;
  const auto want = [&](const char* suite) {
    return only.empty() || only == suite;
  };
  if (want("ei")) run_ei_suite(out, ei_tol);
  if (want("quadrature")) run_quadrature_suite(out);
  if (want("closed-form")) run_closed_form_suite(out);
  if (want("overhead")) run_overhead_suite(out);
  return out;
}

}  // namespace sustain5g::validation
