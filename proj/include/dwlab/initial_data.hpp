#pragma once

// Compactly supported data pairs (f, g), the d'Alembert evolution of the
// free wave with that data, and the damping transform between the damped
// and the normalized unknown.
//
// All profiles are supported in |x| <= 1 and carry closed-form
// antiderivatives, so the free solution needs no quadrature.

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>

#include "dwlab/numerics.hpp"
#include "dwlab/scaling.hpp"

namespace dwlab {

enum class BumpKind { poly_bump, cosine_bump };
enum class DataMode { thm22, zero_moment_general, free_data };

/// A data pair (f, g) with its metadata.  fg_antiderivative is
/// x -> integral of (f + g) from -infinity to x, identically zero beyond
/// the support when the pair has zero moment.
struct DataProfile {
  BumpKind kind = BumpKind::poly_bump;
  DataMode mode = DataMode::thm22;
  double k = 2.0;
  double amplitude = 1.0;
  bool zero_moment = true;

  std::function<double(double)> f;
  std::function<double(double)> g;
  std::function<double(double)> fg_antiderivative;

  double f_sup = 0.0;      // sup |f|
  double f_moment = 0.0;   // integral of f
  double f_l1 = 0.0;       // integral of |f|
  double fplusg_l1 = 0.0;  // integral of |f + g|

  /// Integral of |f|^p by adaptive quadrature.
  double f_lp(double p) const {
    const auto& fn = f;
    return adaptive_simpson([&fn, p](double x) { return pow_abs(fn(x), p); },
                            -1.0, 1.0, 1e-12);
  }
};

namespace detail {

inline double poly_bump_value(double x) {
  if (std::fabs(x) >= 1.0) return 0.0;
  const double s = 1.0 - x * x;
  return s * s * s;
}

// antiderivative of (1-x^2)^3 from -1; total mass 32/35
inline double poly_bump_antiderivative(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 32.0 / 35.0;
  return x - x * x * x + 0.6 * std::pow(x, 5) - std::pow(x, 7) / 7.0 +
         16.0 / 35.0;
}

inline double cosine_bump_value(double x) {
  if (std::fabs(x) >= 1.0) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * x);
  return c * c * c * c;
}

// antiderivative of cos^4(pi x / 2) from -1; total mass 3/4
inline double cosine_bump_antiderivative(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 0.75;
  const double pi = std::numbers::pi;
  return 0.375 * x + std::sin(pi * x) / (2.0 * pi) +
         std::sin(2.0 * pi * x) / (16.0 * pi) + 0.375;
}

// odd C^1 perturbation with zero moment, used to decouple g from -f
inline double odd_bump_value(double x) {
  if (std::fabs(x) >= 1.0) return 0.0;
  const double s = 1.0 - x * x;
  return x * s * s;
}

// antiderivative of x(1-x^2)^2 from -1; vanishes again at +1
inline double odd_bump_antiderivative(double x) {
  if (x <= -1.0 || x >= 1.0) return 0.0;
  const double x2 = x * x;
  return 0.5 * x2 - 0.5 * x2 * x2 + x2 * x2 * x2 / 6.0 - 1.0 / 6.0;
}

}  // namespace detail

/// Build a data pair.  thm22 takes g = -f, zero_moment_general adds an odd
/// perturbation to g while keeping the pair's moment zero, free_data takes
/// g = 0 (nonzero moment).
inline DataProfile make_bump_pair(BumpKind kind, double k, DataMode mode,
                                  double amplitude = 1.0) {
  if (!(k > 1.0)) throw std::invalid_argument("make_bump_pair: need k > 1");
  if (!(amplitude > 0.0))
    throw std::invalid_argument("make_bump_pair: need amplitude > 0");

  DataProfile out;
  out.kind = kind;
  out.mode = mode;
  out.k = k;
  out.amplitude = amplitude;

  const double a = amplitude;
  double (*base)(double) = kind == BumpKind::poly_bump
                               ? detail::poly_bump_value
                               : detail::cosine_bump_value;
  double (*base_anti)(double) = kind == BumpKind::poly_bump
                                    ? detail::poly_bump_antiderivative
                                    : detail::cosine_bump_antiderivative;
  const double mass =
      kind == BumpKind::poly_bump ? 32.0 / 35.0 : 0.75;  // integral of base

  out.f = [a, base](double x) { return a * base(x); };
  out.f_sup = a;
  out.f_moment = a * mass;
  out.f_l1 = a * mass;

  switch (mode) {
    case DataMode::thm22:
      out.g = [a, base](double x) { return -a * base(x); };
      out.fg_antiderivative = [](double) { return 0.0; };
      out.fplusg_l1 = 0.0;
      out.zero_moment = true;
      break;
    case DataMode::zero_moment_general:
      out.g = [a, base](double x) {
        return a * (detail::odd_bump_value(x) - base(x));
      };
      out.fg_antiderivative = [a](double x) {
        return a * detail::odd_bump_antiderivative(x);
      };
      out.fplusg_l1 = a / 3.0;  // odd bump: 2 * integral over [0, 1] = 1/3
      out.zero_moment = true;
      break;
    case DataMode::free_data:
      out.g = [](double) { return 0.0; };
      out.fg_antiderivative = [a, base_anti](double x) {
        return a * base_anti(x);
      };
      out.fplusg_l1 = a * mass;
      out.zero_moment = false;
      break;
  }
  return out;
}

/// Free wave evolution of the normalized unknown: position datum f,
/// velocity datum f + g (the damping transform at mu = 2 shifts the
/// velocity by f).  The integral term uses the stored antiderivative.
inline double dalembert_u0(const DataProfile& pr, double x, double t) {
  return 0.5 * (pr.f(x + t) + pr.f(x - t)) +
         0.5 * (pr.fg_antiderivative(x + t) - pr.fg_antiderivative(x - t));
}

/// Callable wrapper around dalembert_u0.
struct FreeSolution {
  DataProfile profile;
  double operator()(double x, double t) const {
    return dalembert_u0(profile, x, t);
  }
};

struct SupportReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_abs = 0.0;
  double worst_x = 0.0;
  double worst_t = 0.0;
  bool ok = true;
};

/// Verify that the free solution vanishes outside the annulus
/// t - k <= |x| <= t + k on the given sample points.  Requires a zero
/// moment pair; without it the solution has a nonvanishing tail.
inline SupportReport check_support_u0(const DataProfile& pr,
                                      std::span<const double> xs,
                                      std::span<const double> ts,
                                      double tol = 1e-12) {
  if (!pr.zero_moment)
    throw std::invalid_argument(
        "check_support_u0: annulus support requires a zero moment pair");
  SupportReport rep;
  for (double t : ts) {
    for (double x : xs) {
      const double r = std::fabs(x);
      if (r >= t - pr.k && r <= t + pr.k) continue;  // inside the annulus
      const double v = std::fabs(dalembert_u0(pr, x, t));
      ++rep.checked;
      if (v > rep.worst_abs) {
        rep.worst_abs = v;
        rep.worst_x = x;
        rep.worst_t = t;
      }
      if (v > tol) ++rep.violations;
    }
  }
  rep.ok = rep.violations == 0;
  return rep;
}

/// Damping transform u = (1+t)^(mu/2) v and its inverse.
inline double liouville_forward(double v, double t, double mu) {
  return std::pow(1.0 + t, 0.5 * mu) * v;
}

inline double liouville_backward(double u, double t, double mu) {
  return std::pow(1.0 + t, -0.5 * mu) * u;
}

}  // namespace dwlab
