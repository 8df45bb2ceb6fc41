#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "sustain5g/errors.hpp"

namespace sustain5g {

// Closed interval [lo, hi] with lo < hi enforced at construction.
struct RealInterval {
  double lo;
  double hi;

  RealInterval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(std::isfinite(lo) && std::isfinite(hi)))
      throw config_error("interval bounds must be finite");
    if (!(lo < hi)) throw config_error("interval requires lo < hi");
  }

  double length() const { return hi - lo; }
};

struct QuadratureResult {
  double value;
  double error_estimate;
  std::size_t evaluations;
};

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Power series Ei(x) = gamma + ln|x| + sum_{k>=1} x^k/(k*k!).
// Usable on (0, 40]; on the negative axis only down to about -6 before
// alternating-term cancellation erodes double precision.
inline double ei_power_series(double x) {
  const double eps = std::numeric_limits<double>::epsilon();
  double sum = 0.0;
  double term = 1.0;  // x^k / k!
  for (int k = 1; k <= 200; ++k) {
    term *= x / k;
    const double add = term / k;
    sum += add;
    if (std::fabs(add) < eps * std::fabs(sum)) break;
  }
  return kEulerGamma + std::log(std::fabs(x)) + sum;
}

// Asymptotic expansion Ei(x) ~ e^x/x * sum_{k>=0} k!/x^k, truncated at the
// smallest term. Accurate to well below double epsilon for |x| > 40.
inline double ei_asymptotic(double x) {
  const double eps = std::numeric_limits<double>::epsilon();
  double sum = 1.0;
  double term = 1.0;  // k! / x^k
  for (int k = 1; k <= 150; ++k) {
    const double next = term * static_cast<double>(k) / x;
    if (std::fabs(next) >= std::fabs(term)) break;
    term = next;
    sum += term;
    if (std::fabs(term) < eps * std::fabs(sum)) break;
  }
  return std::exp(x) / x * sum;
}

// Continued fraction for E1(y), y > 0, evaluated with the modified Lentz
// scheme. Converges fast for y > ~1; used here for y > 6.
inline double e1_continued_fraction(double y) {
  const double tiny = 1e-300;
  const double eps = std::numeric_limits<double>::epsilon();
  double b = y + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 300; ++i) {
    const double a = -static_cast<double>(i) * static_cast<double>(i);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::fabs(del - 1.0) <= eps) break;
  }
  return h * std::exp(-y);
}

}  // namespace detail

// Exponential integral Ei(x) for 1e-308 <= |x| <= 700.
// Branches: power series on [-6, 0) and (0, 40], continued fraction
// (via Ei(x) = -E1(-x)) below -6, asymptotic expansion above 40.
// Throws std::domain_error at x = 0 (and NaN), std::overflow_error
// once |x| > 700 where e^|x| leaves double range.
inline double exp_integral_ei(double x) {
  if (std::isnan(x)) throw std::domain_error("Ei: argument is NaN");
  if (x == 0.0) throw std::domain_error("Ei: singular at x = 0");
  if (!(std::fabs(x) <= 700.0))
    throw std::overflow_error("Ei: |x| > 700 exceeds double exponent range");
  if (x > 40.0) return detail::ei_asymptotic(x);
  if (x >= -6.0) return detail::ei_power_series(x);
  return -detail::e1_continued_fraction(-x);
}

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1] (QUADPACK dqk15 nodes).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
  double integral;
  double error;
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  const double fc = f(center);
  double resg = kGaussWeights[3] * fc;
  double resk = kKronrodWeights[7] * fc;
  double resabs = kKronrodWeights[7] * std::fabs(fc);

  double flo[7];
  double fhi[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    flo[j] = f(center - dx);
    fhi[j] = f(center + dx);
    const double fsum = flo[j] + fhi[j];
    resk += kKronrodWeights[j] * fsum;
    resabs += kKronrodWeights[j] * (std::fabs(flo[j]) + std::fabs(fhi[j]));
    if (j % 2 == 1) resg += kGaussWeights[j / 2] * fsum;
  }

  const double reskh = 0.5 * resk;
  double resasc = kKronrodWeights[7] * std::fabs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += kKronrodWeights[j] *
              (std::fabs(flo[j] - reskh) + std::fabs(fhi[j] - reskh));
  }

  const double habs = std::fabs(half);
  resasc *= habs;
  resabs *= habs;
  double err = std::fabs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(eps * 50.0 * resabs, err);
  return {resk * half, err};
}

}  // namespace detail

// Adaptive Gauss-Kronrod 7-15 with stack-based interval bisection.
// Accepts a panel once its error fits a length-proportional share of
// max(tol, tol*|I0|), I0 the first whole-interval estimate, so absolute
// tolerance governs near-zero integrals and relative tolerance elsewhere.
// Deterministic for fixed f and tol. Throws quadrature_error when the
// evaluation budget is exhausted or f produces non-finite values.
template <class F>
QuadratureResult integrate_adaptive(F&& f, const RealInterval& interval,
                                    double tol,
                                    std::size_t max_evaluations = 1000000) {
  if (!(tol > 0.0)) throw config_error("quadrature tolerance must be > 0");

  struct Segment {
    double a, b, integral, error;
  };

  auto panel_or_throw = [&](double a, double b) {
    detail::Panel p = detail::gauss_kronrod_15(f, a, b);
    if (!std::isfinite(p.integral))
      throw quadrature_error("integrand produced a non-finite value");
    return p;
  };

  const double span = interval.length();
  std::size_t evals = 15;
  detail::Panel whole = panel_or_throw(interval.lo, interval.hi);
  const double target = std::max(tol, tol * std::fabs(whole.integral));

  double value = 0.0;
  double error = 0.0;
  std::vector<Segment> stack;
  stack.push_back({interval.lo, interval.hi, whole.integral, whole.error});

  while (!stack.empty()) {
    const Segment seg = stack.back();
    stack.pop_back();
    const double share = target * ((seg.b - seg.a) / span);
    const double mid = 0.5 * (seg.a + seg.b);
    if (seg.error <= share || !(seg.a < mid && mid < seg.b)) {
      value += seg.integral;
      error += seg.error;
      continue;
    }
    if (evals + 30 > max_evaluations)
      throw quadrature_error(
          "adaptive quadrature exhausted its evaluation budget");
    detail::Panel left = panel_or_throw(seg.a, mid);
    detail::Panel right = panel_or_throw(mid, seg.b);
    evals += 30;
    stack.push_back({mid, seg.b, right.integral, right.error});
    stack.push_back({seg.a, mid, left.integral, left.error});
  }
  return {value, error, evals};
}

}  // namespace sustain5g
