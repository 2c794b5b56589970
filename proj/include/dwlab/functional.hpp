#pragma once

// Space-integral diagnostics and blow-up machinery: the functional
// F(t) = int u dx, its measured identity F'' = (1+t)^(1-p) int |u|^p dx,
// lower-bound certificates, the doubling-exponent lifespan bound, a
// two-term comparison ODE, and the critical-case sliced cascade.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwlab/duhamel.hpp"
#include "dwlab/initial_data.hpp"
#include "dwlab/numerics.hpp"
#include "dwlab/rk45.hpp"
#include "dwlab/scaling.hpp"

namespace dwlab {

struct FunctionalTrace {
  std::vector<double> times;
  std::vector<double> F;
  std::vector<double> dF;
  std::vector<double> ddF;
  std::vector<double> source;  // (1+t)^(1-p) int |u|^p dx
  SolveStatus status = SolveStatus::completed;
  double t_blowup = -1.0;
};

namespace detail {

// Uniform-step first and second differences; second order in the interior,
// one-sided at the ends (first order for ddF there).
inline void finish_trace(FunctionalTrace& tr) {
  const std::size_t n = tr.times.size();
  if (n < 4) throw std::invalid_argument("trace needs at least 4 samples");
  const double h = tr.times[1] - tr.times[0];
  tr.dF.assign(n, 0.0);
  tr.ddF.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    tr.dF[i] = (tr.F[i + 1] - tr.F[i - 1]) / (2.0 * h);
    tr.ddF[i] = (tr.F[i + 1] - 2.0 * tr.F[i] + tr.F[i - 1]) / (h * h);
  }
  tr.dF[0] = (-3.0 * tr.F[0] + 4.0 * tr.F[1] - tr.F[2]) / (2.0 * h);
  tr.dF[n - 1] = (3.0 * tr.F[n - 1] - 4.0 * tr.F[n - 2] + tr.F[n - 3]) / (2.0 * h);
  tr.ddF[0] = (2.0 * tr.F[0] - 5.0 * tr.F[1] + 4.0 * tr.F[2] - tr.F[3]) / (h * h);
  tr.ddF[n - 1] = (2.0 * tr.F[n - 1] - 5.0 * tr.F[n - 2] + 4.0 * tr.F[n - 3] -
                   tr.F[n - 4]) /
                  (h * h);
}

}  // namespace detail

/// Row sums of a recorded field.
inline FunctionalTrace compute_F(const CharacteristicField& field,
                                 const ProblemParams& pa) {
  const auto& g = field.grid;
  FunctionalTrace tr;
  tr.times.reserve(g.nt);
  for (int n = 0; n < g.nt; ++n) {
    double su = 0.0, sp = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      const double v = field.at(n, i);
      su += v;
      sp += pow_abs(v, pa.p);
    }
    tr.times.push_back(g.t(n));
    tr.F.push_back(g.h * su);
    tr.source.push_back(std::pow(1.0 + g.t(n), 1.0 - pa.p) * g.h * sp);
  }
  detail::finish_trace(tr);
  return tr;
}

/// Assemble a trace from row integrals computed elsewhere: int_u[i] is
/// the x-integral of u at times[i], int_abs_p[i] that of |u|^p.
inline FunctionalTrace trace_from_rows(std::vector<double> times,
                                       std::vector<double> int_u,
                                       const std::vector<double>& int_abs_p,
                                       const ProblemParams& pa,
                                       SolveStatus status = SolveStatus::completed,
                                       double t_blowup = -1.0) {
  if (times.size() != int_u.size() || times.size() != int_abs_p.size())
    throw std::invalid_argument("trace_from_rows: row arrays disagree");
  FunctionalTrace tr;
  tr.times = std::move(times);
  tr.F = std::move(int_u);
  tr.source.reserve(tr.times.size());
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    tr.source.push_back(std::pow(1.0 + tr.times[i], 1.0 - pa.p) *
                        int_abs_p[i]);
  tr.status = status;
  tr.t_blowup = t_blowup;
  detail::finish_trace(tr);
  return tr;
}

/// Cheaper path: the march already accumulated the row sums.
inline FunctionalTrace trace_from_march(const MarchResult& res,
                                        const ProblemParams& pa) {
  return trace_from_rows(res.times, res.int_u, res.int_abs_p, pa, res.status,
                         res.t_blowup);
}

inline void write_trace_csv(const std::string& path,
                            const FunctionalTrace& tr) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw IoError("cannot open for writing", path);
  std::fprintf(fp, "t,F,dF,ddF,source\n");
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g\n", tr.times[i], tr.F[i],
                 tr.dF[i], tr.ddF[i], tr.source[i]);
  std::fclose(fp);
}

/// Largest relative gap between the measured F'' and the source integral,
/// over interior samples where the source is not negligible.
inline double f_identity_error(const FunctionalTrace& tr) {
  double sup_src = 0.0;
  for (double s : tr.source) sup_src = std::max(sup_src, std::fabs(s));
  if (sup_src == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < tr.times.size(); ++i) {
    if (std::fabs(tr.source[i]) < 1e-6 * sup_src) continue;
    worst = std::max(worst,
                     std::fabs(tr.ddF[i] - tr.source[i]) / std::fabs(tr.source[i]));
  }
  return worst;
}

struct BoundCheck {
  bool ok = true;
  double worst_ratio = std::numeric_limits<double>::infinity();
  double t_worst = -1.0;
  long checked = 0;
};

/// Convexity certificate F'' >= 2^(1-p) (t+k)^(-2(p-1)) |F|^p, verified on
/// the measured trace wherever the right side is not negligible.
inline BoundCheck holder_lower_bound_check(const FunctionalTrace& tr,
                                           const ProblemParams& pa,
                                           double slack = 0.02) {
  const double q = 2.0 * (pa.p - 1.0);
  const double B = std::pow(2.0, -(pa.p - 1.0));
  double sup_rhs = 0.0;
  std::vector<double> rhs(tr.times.size());
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    rhs[i] = B * std::pow(tr.times[i] + pa.k, -q) * pow_abs(tr.F[i], pa.p);
    sup_rhs = std::max(sup_rhs, rhs[i]);
  }
  BoundCheck out;
  for (std::size_t i = 1; i + 1 < tr.times.size(); ++i) {
    if (rhs[i] < 1e-6 * sup_rhs) continue;
    const double ratio = tr.ddF[i] / rhs[i];
    ++out.checked;
    if (ratio < out.worst_ratio) {
      out.worst_ratio = ratio;
      out.t_worst = tr.times[i];
    }
  }
  out.ok = out.checked > 0 && out.worst_ratio >= 1.0 - slack;
  return out;
}

/// Propagation certificate u(x,t) >= eps f(x-t) / 2 on the outgoing strip,
/// checked on the recorded lattice.  Needs the reflection-free data mode.
inline BoundCheck pointwise_lower_bound_check(const CharacteristicField& field,
                                              const DataProfile& pr,
                                              const ProblemParams& pa,
                                              double slack = 0.02,
                                              double rhs_threshold = 1e-3) {
  if (pr.mode != DataMode::thm22)
    throw std::invalid_argument(
        "pointwise bound requires the mirrored-velocity data mode");
  const auto& g = field.grid;
  const double cut = rhs_threshold * pa.eps * pr.f_sup;
  BoundCheck out;
  for (int n = 0; n < g.nt; ++n) {
    const double t = g.t(n);
    for (int i = 0; i < g.nx; ++i) {
      const double s = g.x(i) - t;
      if (s < -pa.k || s > pa.k) continue;
      const double rhs = 0.5 * pa.eps * pr.f(s);
      if (rhs < cut) continue;
      const double ratio = field.at(n, i) / rhs;
      ++out.checked;
      if (ratio < out.worst_ratio) {
        out.worst_ratio = ratio;
        out.t_worst = t;
      }
    }
  }
  out.ok = out.checked > 0 && out.worst_ratio >= 1.0 - slack;
  return out;
}

// ---------------------------------------------------------------------------
// Doubling-exponent lifespan bound.
//
// Premises, for p > 1, a > 0, q > 0 with M = (p-1)a/2 - q/2 + 1 > 0:
//   F(t) >= A t^a          for t >= T0,
//   F''(t) >= B (t+k)^(-q) |F|^p   for t >= 0,
//   F(0) > 0, F'(0) = 0, and F(t0) >= 2 F(0) for some t0.
// Conclusion: the solution cannot extend past 2^(2/M) max{T0, t0, k} once
// max{T0, t0, k} clears a threshold scaling like A^(-(p-1)/(2M)).
// ---------------------------------------------------------------------------

struct KatoParams {
  double p = 2.0;
  double a = 1.0;   // growth exponent of the verified lower bound
  double q = 2.0;   // decay exponent in the convexity inequality
  double A = 0.0;   // premise constants, kept for reporting
  double B = 0.0;
  double T0 = 0.0;  // time from which the growth bound holds
  double t0 = 0.0;  // measured doubling time of F
  double k = 2.0;
};

inline double kato_exponent_M(double p, double a, double q) {
  return 0.5 * (p - 1.0) * a - 0.5 * q + 1.0;
}

inline double kato_lifespan_bound(const KatoParams& kp) {
  const double M = kato_exponent_M(kp.p, kp.a, kp.q);
  if (!(M > 0.0))
    throw NumericalError(
        "doubling bound degenerates (M <= 0): use the sliced cascade");
  const double T1 = std::max({kp.T0, kp.t0, kp.k});
  return std::pow(2.0, 2.0 / M) * T1;
}

/// First time the trace reaches 2 F(0), linearly interpolated; -1 if never.
inline double measured_doubling_time(const FunctionalTrace& tr) {
  if (tr.F.empty() || !(tr.F[0] > 0.0)) return -1.0;
  const double target = 2.0 * tr.F[0];
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    if (tr.F[i] >= target) {
      const double f0 = tr.F[i - 1], f1 = tr.F[i];
      const double w = f1 > f0 ? (target - f0) / (f1 - f0) : 1.0;
      return tr.times[i - 1] + w * (tr.times[i] - tr.times[i - 1]);
    }
  }
  return -1.0;
}

// ---------------------------------------------------------------------------
// Integrated lower bounds for the functional, valid for t >= 4k.
// ---------------------------------------------------------------------------

/// Shape of the twice-integrated source bound: eps^p times t^(3-p), or
/// t log(t/2k) at p = 2, or t above p = 2.
inline double lower_bound_cascade(double eps, const ProblemParams& pa,
                                  double t, double C = 1.0) {
  pa.validate();
  if (t < 4.0 * pa.k)
    throw std::invalid_argument("cascade bound starts at t = 4k");
  const double ep = std::pow(eps, pa.p);
  switch (regime_of(pa.p)) {
    case PRegime::subcritical_low:
      return C * ep * std::pow(t, 3.0 - pa.p);
    case PRegime::p_equal_2:
      return C * ep * t * std::log(t / (2.0 * pa.k));
    default:
      return C * ep * t;
  }
}

/// Doubling time t0 implied by the cascade shape: the root of
/// C eps^p shape(t0) = 2 eps f_l1.  Returned raw; only meaningful >= 4k.
inline double t0_from_cascade(double eps, const ProblemParams& pa,
                              double C = 1.0, double f_l1 = 32.0 / 35.0) {
  pa.validate();
  const double target = 2.0 * f_l1 / (C * std::pow(eps, pa.p - 1.0));
  switch (regime_of(pa.p)) {
    case PRegime::subcritical_low:
      return std::pow(target, 1.0 / (3.0 - pa.p));
    case PRegime::p_equal_2: {
      const double tk = 2.0 * pa.k;
      auto fn = [&](double t) { return t * std::log(t / tk) - target; };
      auto dfn = [&](double t) { return std::log(t / tk) + 1.0; };
      const double hi = std::max(4.0 * tk, 10.0 * target);
      return solve_bisect_newton(fn, dfn, tk * (1.0 + 1e-12), hi, 1e-6,
                                 1e-9 * std::max(1.0, target));
    }
    default:
      return target;
  }
}

// ---------------------------------------------------------------------------
// Sliced cascade for the critical power p = 3.  Nested lower bounds
//   F(t) >= D_j t log^{b_j}(t / (a_j K)) for t >= a_j K,  K = 4k,
// with a_j = 2 - 2^-j, b_{j+1} = 3 b_j + 1, and
// D_{j+1} = D_j^3 / (2^{j+8} (3 b_j + 1)).  The closed forms and the
// log-domain recursion are both exposed so they can be cross-checked.
// ---------------------------------------------------------------------------

struct SlicingReport {
  std::vector<std::uint64_t> b_exact;  // exact integers while they fit
  std::vector<double> a;               // slice anchors, 2 - 2^-j
  std::vector<double> log_D;           // log-domain recursion
  std::vector<double> log_D_floor;     // proven floor 3^(j-1)(log D0 - S log 3)
  double S_partial = 0.0;              // truncated series sum_{i<j_max} (2i+8)/3^i
  double S = 13.5;                     // its limit
  double K = 0.0;                      // 4k
  double D0 = 0.0;
  double bound_log_t = 0.0;            // log of the lifespan bound
};

inline std::uint64_t slicing_b_closed(int j) {
  if (j < 0 || j > 39)
    throw std::invalid_argument("exact slice exponent needs 0 <= j <= 39");
  std::uint64_t pow3 = 1;
  for (int i = 0; i < j; ++i) pow3 *= 3ull;
  return (pow3 - 1ull) / 2ull;
}

/// Runs the cascade bookkeeping for j = 0..j_max and the lifespan bound
/// log(2K) + (3^S / D0)^2 implied by the divergence criterion I(t) > 1,
/// I(t) = (D0 / 3^S) sqrt(log(t / 2K)).
inline SlicingReport slicing_cascade(double eps, const ProblemParams& pa,
                                     int j_max, double C = 1.0) {
  pa.validate();
  if (std::fabs(pa.p - 3.0) > regime_tol)
    throw std::invalid_argument("sliced cascade applies at p = 3");
  if (j_max < 1 || j_max > 200)
    throw std::invalid_argument("slice count out of range");
  SlicingReport rep;
  rep.K = 4.0 * pa.k;
  rep.D0 = C * eps * eps * eps;

  const double log3 = std::log(3.0);
  const double log2c = std::log(2.0);
  std::uint64_t b = 0;
  double logD = std::log(rep.D0);
  for (int j = 0; j <= j_max; ++j) {
    if (j <= 39) rep.b_exact.push_back(b);
    rep.a.push_back(2.0 - std::ldexp(1.0, -j));
    rep.log_D.push_back(logD);
    rep.log_D_floor.push_back(j == 0 ? std::log(rep.D0)
                                     : std::pow(3.0, j - 1) *
                                           (std::log(rep.D0) - rep.S * log3));
    if (j < j_max) {
      // log(3 b_j + 1) = log b_{j+1} = (j+1) log 3 - log 2 + log1p(-3^-(j+1))
      const double log_b_next =
          j + 1 <= 39 ? std::log(3.0 * static_cast<double>(b) + 1.0)
                      : (j + 1) * log3 - log2c +
                            std::log1p(-std::pow(3.0, -(j + 1.0)));
      logD = 3.0 * logD - (j + 8) * log2c - log_b_next;
      if (j + 1 <= 39) b = 3ull * b + 1ull;
    }
  }
  for (int i = 0; i < j_max; ++i)
    rep.S_partial += (2.0 * i + 8.0) / std::pow(3.0, i);

  const double log_ratio = rep.S * log3 - std::log(rep.D0);  // log(3^S / D0)
  rep.bound_log_t = std::log(2.0 * rep.K) + std::exp(2.0 * log_ratio);
  return rep;
}

/// Divergence indicator of the cascade at time t (must exceed 1 to conclude).
inline double slicing_indicator(const SlicingReport& rep, double t) {
  if (t <= 2.0 * rep.K) return 0.0;
  return rep.D0 * std::exp(-rep.S * std::log(3.0)) *
         std::sqrt(std::log(t / (2.0 * rep.K)));
}

// ---------------------------------------------------------------------------
// Two-term comparison ODE:
//   F'' = c1 (t+k)^(-2(p-1)) |F|^p + c2 eps^p t^(1-p) [t >= k],
//   F(0) = eps |f|_1, F'(0) = 0,
// with c1 = 2^(1-p) from the convexity bound and c2 = 2^(1-2p) int f^p from
// the outgoing-strip bound.  Blow-up is reported when the adaptive step
// collapses below a relative floor while F is already huge.
// ---------------------------------------------------------------------------

struct OdeOptions {
  double c1 = -1.0;           // < 0: 2^(1-p)
  double c2 = -1.0;           // < 0: 2^(1-2p) int f^p
  double rtol = 1e-10;
  double atol = 1e-300;
  double t_cap = 1e290;
  double F_big = 1e12;        // "already huge" threshold
  double dt_floor_rel = 1e-12;
  long max_steps = 4000000;
};

struct OdeLifespan {
  SolveStatus status = SolveStatus::unresolved;
  double t_blowup = -1.0;
  double final_t = 0.0;
  double final_F = 0.0;
  double final_dF = 0.0;
  long accepted = 0;
  long rejected = 0;
};

inline OdeLifespan ode_comparison_lifespan(const DataProfile& pr,
                                           const ProblemParams& pa,
                                           const OdeOptions& opt = {}) {
  pa.validate();
  const double p = pa.p;
  const double eps = pa.eps;
  const double c1 = opt.c1 > 0.0 ? opt.c1 : std::pow(2.0, 1.0 - p);
  const double c2 = opt.c2 > 0.0 ? opt.c2 : std::pow(2.0, 1.0 - 2.0 * p) * pr.f_lp(p);
  const double q = 2.0 * (p - 1.0);
  const double log_c1 = std::log(c1);
  const double log_src = std::log(c2) + p * std::log(eps);

  auto rhs = [&](double t, const OdeState<2>& y, OdeState<2>& dy) {
    dy[0] = y[1];
    double growth = 0.0;
    const double aF = std::fabs(y[0]);
    if (aF > 0.0) {
      const double le = log_c1 + p * std::log(aF) - q * std::log(t + pa.k);
      growth = le > 705.0 ? std::numeric_limits<double>::infinity()
                          : std::exp(le);
    }
    double src = 0.0;
    if (t >= pa.k) src = std::exp(log_src + (1.0 - p) * std::log(t));
    dy[1] = growth + src;
  };

  OdeLifespan out;
  OdeState<2> y{eps * pr.f_l1, 0.0};
  double t = 0.0;
  double dt_ctrl = 1e-3 * pa.k;  // controller step; trial may be clamped
  while (out.accepted + out.rejected < opt.max_steps) {
    if (t >= opt.t_cap) {
      out.status = SolveStatus::completed;
      break;
    }
    double dt = dt_ctrl;
    if (t < pa.k) dt = std::min(dt, pa.k - t);
    dt = std::min(dt, opt.t_cap - t);
    OdeState<2> ynew;
    const bool clamped = dt < dt_ctrl;
    const double err = rk45_step(rhs, t, y, dt, ynew, opt.rtol, opt.atol);
    if (err <= 1.0) {
      t += dt;
      y = ynew;
      ++out.accepted;
      if (!clamped) dt_ctrl = dt * rk45_factor(err);
    } else {
      ++out.rejected;
      dt_ctrl = dt * rk45_factor(err);
    }
    if (dt_ctrl < opt.dt_floor_rel * std::max(1.0, t)) {
      out.status = y[0] >= opt.F_big ? SolveStatus::blew_up
                                     : SolveStatus::unresolved;
      if (out.status == SolveStatus::blew_up) out.t_blowup = t;
      break;
    }
  }
  out.final_t = t;
  out.final_F = y[0];
  out.final_dF = y[1];
  return out;
}

}  // namespace dwlab
