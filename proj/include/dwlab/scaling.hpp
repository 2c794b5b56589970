#pragma once

// Critical exponents, regime classification, weight functions, and
// closed-form blow-up time predictions for the damped semilinear wave
// equation v_tt - Dv + mu/(1+t) v_t = |v|^p.

#include <cmath>
#include <optional>
#include <stdexcept>

#include "dwlab/numerics.hpp"

namespace dwlab {

/// Problem parameters shared by every solver and estimate.
struct ProblemParams {
  double p = 2.0;    // nonlinearity exponent, p > 1
  int n = 1;         // spatial dimension
  double mu = 2.0;   // damping coefficient
  double k = 2.0;    // support radius of the data, k > 1
  double eps = 1.0;  // data amplitude, eps > 0

  void validate() const {
    if (!(p > 1.0)) throw std::invalid_argument("ProblemParams: need p > 1");
    if (n < 1) throw std::invalid_argument("ProblemParams: need n >= 1");
    if (!(mu >= 0.0)) throw std::invalid_argument("ProblemParams: need mu >= 0");
    if (!(k > 1.0)) throw std::invalid_argument("ProblemParams: need k > 1");
    if (!(eps > 0.0)) throw std::invalid_argument("ProblemParams: need eps > 0");
  }

  /// Extra constraints for the PDE solvers, which are one dimensional and
  /// cover the undamped and the mu = 2 damped problem only.
  void validate_for_solver() const {
    validate();
    if (n != 1)
      throw std::invalid_argument("solvers are one dimensional (n must be 1)");
    if (mu != 0.0 && mu != 2.0)
      throw std::invalid_argument("solvers require mu in {0, 2}");
  }
};

/// Tolerance used when deciding whether p sits on a regime boundary.
inline constexpr double regime_tol = 1e-12;

enum class PRegime { subcritical_low, p_equal_2, subcritical_high, critical };

/// Regime of the nonlinearity exponent within (1, 3].
inline PRegime regime_of(double p) {
  if (std::fabs(p - 2.0) <= regime_tol) return PRegime::p_equal_2;
  if (std::fabs(p - 3.0) <= regime_tol) return PRegime::critical;
  if (p > 1.0 && p < 2.0) return PRegime::subcritical_low;
  if (p > 2.0 && p < 3.0) return PRegime::subcritical_high;
  throw std::invalid_argument("regime_of: p must lie in (1, 3]");
}

/// gamma(p, n) = 2 + (n+1) p - (n-1) p^2.  Real n is accepted so the
/// dimension can carry a damping shift.
inline double gamma_exponent(double p, double n) {
  return 2.0 + (n + 1.0) * p - (n - 1.0) * p * p;
}

/// Fujita exponent 1 + 2/n.
inline double fujita_exponent(int n) {
  if (n < 1) throw std::invalid_argument("fujita_exponent: need n >= 1");
  return 1.0 + 2.0 / static_cast<double>(n);
}

/// Positive root of gamma(p, d) = 0 for real dimension d > 1; no finite
/// root exists for d <= 1 (gamma is then positive for all p > 0).
inline std::optional<double> strauss_exponent_shifted(double d) {
  if (d <= 1.0) return std::nullopt;
  return (d + 1.0 + std::sqrt(d * d + 10.0 * d - 7.0)) / (2.0 * (d - 1.0));
}

inline std::optional<double> strauss_exponent(int n) {
  if (n < 1) throw std::invalid_argument("strauss_exponent: need n >= 1");
  return strauss_exponent_shifted(static_cast<double>(n));
}

/// Threshold damping (n^2 + n + 2) / (n + 2): at or above it the damped
/// problem scales like the heat problem, below it like the free wave.
inline double mu_zero(int n) {
  if (n < 1) throw std::invalid_argument("mu_zero: need n >= 1");
  return static_cast<double>(n * n + n + 2) / static_cast<double>(n + 2);
}

enum class DampingRegime { heat_like, wave_like };

inline DampingRegime classify_regime(const ProblemParams& pa) {
  pa.validate();
  return pa.mu >= mu_zero(pa.n) ? DampingRegime::heat_like
                                : DampingRegime::wave_like;
}

/// Root b of eps^2 * b * log(1 + b) = 1, the p = 2 lifespan magnitude.
/// The residual of the returned root is at most 1e-12.
inline double solve_b(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("solve_b: need eps > 0");
  const double e2 = eps * eps;
  auto g = [e2](double b) { return e2 * b * std::log1p(b) - 1.0; };
  auto dg = [e2](double b) { return e2 * (std::log1p(b) + b / (1.0 + b)); };
  const double hi = std::max(1.0, 10.0 / e2);
  return solve_bisect_newton(g, dg, 1e-16, hi, 1e-6, 1e-12);
}

/// Root a of eps^2 * a^2 * log(1 + a) = 1, the undamped 2-d critical
/// lifespan magnitude.
inline double solve_a(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("solve_a: need eps > 0");
  const double e2 = eps * eps;
  auto g = [e2](double a) { return e2 * a * a * std::log1p(a) - 1.0; };
  auto dg = [e2](double a) {
    return e2 * (2.0 * a * std::log1p(a) + a * a / (1.0 + a));
  };
  const double hi = std::max(2.0, 10.0 / eps);
  return solve_bisect_newton(g, dg, 1e-16, hi, 1e-6, 1e-12);
}

/// Homogeneity variable (t + r + 2k) / k of the a priori weights.
inline double tau_plus(double r, double t, double k) {
  return (t + r + 2.0 * k) / k;
}

/// Solution weight: 1 for p > 2, 1/log(tau) at p = 2, tau^(p-2) below.
inline double weight_w(double r, double t, double p, double k) {
  switch (regime_of(p)) {
    case PRegime::p_equal_2:
      return 1.0 / std::log(tau_plus(r, t, k));
    case PRegime::subcritical_low:
      return std::pow(tau_plus(r, t, k), p - 2.0);
    default:
      return 1.0;
  }
}

/// Growth envelope D(T) of the weighted nonlinear estimate, in terms of
/// the normalized horizon T_k = (T + 2k) / k.
inline double growth_D(double T, double p, double k) {
  if (!(T >= 0.0)) throw std::invalid_argument("growth_D: need T >= 0");
  if (!(k > 1.0)) throw std::invalid_argument("growth_D: need k > 1");
  const double Tk = (T + 2.0 * k) / k;
  switch (regime_of(p)) {
    case PRegime::critical:
      return std::log(Tk);
    case PRegime::subcritical_high:
      return std::pow(Tk, 3.0 - p);
    case PRegime::p_equal_2:
      return Tk * std::log(Tk);
    case PRegime::subcritical_low:
      return std::pow(Tk, 0.5 * gamma_exponent(p, 3.0));
  }
  return 0.0;  // unreachable
}

enum class LifespanForm { power, b_eps, exponential };

/// Which published lifespan table a prediction refers to.
enum class LifespanReference { new_1d, heat, wave, nondamped };

/// T(eps) up to constants: eps^-exponent, C * b(eps), or
/// exp(C * eps^-exponent).
struct LifespanPrediction {
  PRegime regime;
  LifespanForm form;
  double exponent;  // power or exponential rate; unused for b_eps
  LifespanReference reference;
};

/// Blow-up time magnitude predicted for the given parameters by one of
/// the four reference scaling tables.  new_1d is the damped mu = 2 table
/// in one dimension; heat / wave / nondamped are the comparison tables.
inline LifespanPrediction predicted_lifespan(double eps, const ProblemParams& pa,
                                             LifespanReference ref) {
  if (!(eps > 0.0)) throw std::invalid_argument("predicted_lifespan: eps > 0");
  pa.validate();
  const double p = pa.p;
  LifespanPrediction out{};
  out.reference = ref;

  switch (ref) {
    case LifespanReference::new_1d: {
      if (pa.n != 1)
        throw std::invalid_argument("new_1d lifespan table is one dimensional");
      out.regime = regime_of(p);
      switch (out.regime) {
        case PRegime::subcritical_low:
          out.form = LifespanForm::power;
          out.exponent = 2.0 * p * (p - 1.0) / gamma_exponent(p, 3.0);
          break;
        case PRegime::p_equal_2:
          out.form = LifespanForm::b_eps;
          out.exponent = 0.0;
          break;
        case PRegime::subcritical_high:
          out.form = LifespanForm::power;
          out.exponent = p * (p - 1.0) / (3.0 - p);
          break;
        case PRegime::critical:
          out.form = LifespanForm::exponential;
          out.exponent = p * (p - 1.0);
          break;
      }
      return out;
    }
    case LifespanReference::heat: {
      const double pf = fujita_exponent(pa.n);
      if (p < pf - regime_tol) {
        out.regime = regime_of(p);
        out.form = LifespanForm::power;
        out.exponent = (p - 1.0) / (2.0 - pa.n * (p - 1.0));
      } else if (std::fabs(p - pf) <= regime_tol) {
        out.regime = regime_of(p);
        out.form = LifespanForm::exponential;
        out.exponent = p - 1.0;
      } else {
        throw std::invalid_argument(
            "heat lifespan table: global existence above the Fujita exponent");
      }
      return out;
    }
    case LifespanReference::wave: {
      const double d = pa.n + pa.mu;
      const auto ps = strauss_exponent_shifted(d);
      if (!ps || p < *ps - regime_tol) {
        out.regime = regime_of(p);
        out.form = LifespanForm::power;
        out.exponent = 2.0 * p * (p - 1.0) / gamma_exponent(p, d);
      } else if (std::fabs(p - *ps) <= regime_tol) {
        out.regime = regime_of(p);
        out.form = LifespanForm::exponential;
        out.exponent = p * (p - 1.0);
      } else {
        throw std::invalid_argument(
            "wave lifespan table: global existence above the shifted critical "
            "exponent");
      }
      return out;
    }
    case LifespanReference::nondamped: {
      out.regime = regime_of(p);
      if (pa.n == 1) {
        out.form = LifespanForm::power;
        out.exponent = 0.5 * (p - 1.0);
      } else if (pa.n == 2 && p < 2.0 - regime_tol) {
        out.form = LifespanForm::power;
        out.exponent = (p - 1.0) / (3.0 - p);
      } else if (pa.n == 2 && std::fabs(p - 2.0) <= regime_tol) {
        out.form = LifespanForm::b_eps;  // magnitude given by the a(eps) root
        out.exponent = 0.0;
      } else {
        throw std::invalid_argument(
            "nondamped lifespan table covers n = 1 and n = 2, p <= 2 only");
      }
      return out;
    }
  }
  throw std::logic_error("predicted_lifespan: unknown reference");
}

/// log of the eps-dependent lifespan magnitude (the constant factor and,
/// for exponential forms, the constant rate are set to 1).
inline double predicted_log_scale(const LifespanPrediction& pred, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("predicted_log_scale: eps > 0");
  switch (pred.form) {
    case LifespanForm::power:
      return -pred.exponent * std::log(eps);
    case LifespanForm::b_eps:
      return std::log(pred.reference == LifespanReference::nondamped
                          ? solve_a(eps)
                          : solve_b(eps));
    case LifespanForm::exponential:
      return std::pow(eps, -pred.exponent);
  }
  return 0.0;  // unreachable
}

}  // namespace dwlab
