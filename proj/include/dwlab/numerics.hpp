#pragma once

// Shared numerical kernels: bracketed root finding, adaptive Simpson
// quadrature, and least-squares line fits.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace dwlab {

/// Thrown when an iteration fails to meet its convergence contract.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Root of f on [lo, hi]: bisection down to a relative bracket width,
/// then a bracket-guarded Newton polish until |f(x)| <= residual_tol.
/// f(lo) and f(hi) must have opposite signs.
template <class F, class DF>
double solve_bisect_newton(F&& f, DF&& df, double lo, double hi,
                           double bracket_rtol, double residual_tol,
                           int max_polish = 80) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NumericalError("solve_bisect_newton: endpoints do not bracket a root");

  while (hi - lo > bracket_rtol * std::max(1.0, std::fabs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted in double precision
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (fhi > 0.0)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }

  double x = 0.5 * (lo + hi);
  double fx = f(x);
  for (int it = 0; it < max_polish; ++it) {
    if (std::fabs(fx) <= residual_tol) return x;
    if ((fx > 0.0) == (fhi > 0.0)) {
      hi = x;
      fhi = fx;
    } else {
      lo = x;
      flo = fx;
    }
    const double d = df(x);
    double xn = (d != 0.0 && std::isfinite(d)) ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // Newton left the bracket
    if (xn == x) break;
    x = xn;
    fx = f(x);
  }
  if (std::fabs(fx) > residual_tol)
    throw NumericalError("solve_bisect_newton: residual tolerance not reached");
  return x;
}

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double fa, double b, double fb,
                                   double m, double fm, double whole,
                                   double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double abs_tol, int max_depth = 48) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, abs_tol,
                                      max_depth);
}

/// Ordinary least squares fit y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n = 0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("fit_line: degenerate abscissae");
  LineFit out;
  out.n = n;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (n > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (out.slope * x[i] + out.intercept);
      ss += r * r;
    }
    out.slope_stderr = std::sqrt(ss / (static_cast<double>(n) - 2.0) / sxx);
  }
  return out;
}

/// Least squares fit of y = slope * x through the origin.
inline LineFit fit_through_origin(std::span<const double> x,
                                  std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("fit_through_origin: size mismatch");
  const std::size_t n = x.size();
  if (n < 1)
    throw std::invalid_argument("fit_through_origin: need at least one point");
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx == 0.0) throw NumericalError("fit_through_origin: degenerate abscissae");
  LineFit out;
  out.n = n;
  out.slope = sxy / sxx;
  out.intercept = 0.0;
  if (n > 1) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - out.slope * x[i];
      ss += r * r;
    }
    out.slope_stderr = std::sqrt(ss / (static_cast<double>(n) - 1.0) / sxx);
  }
  return out;
}

/// |u|^p with fast paths for the half-integer exponents used throughout.
inline double pow_abs(double u, double p) {
  const double a = std::fabs(u);
  if (a == 0.0) return 0.0;
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  if (p == 1.5) return a * std::sqrt(a);
  if (p == 2.5) return a * a * std::sqrt(a);
  return std::exp(p * std::log(a));
}

}  // namespace dwlab
