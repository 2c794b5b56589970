#pragma once

// The source integral over backward characteristic triangles, the lattice
// marching scheme built on the exact parallelogram identity, Picard
// iteration for the integral equation, weighted sup norms, and numerical
// verification of the a priori estimates behind the existence argument.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dwlab/grid.hpp"
#include "dwlab/initial_data.hpp"
#include "dwlab/numerics.hpp"
#include "dwlab/scaling.hpp"

namespace dwlab {

enum class SolveStatus { completed, blew_up, unresolved };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::completed: return "completed";
    case SolveStatus::blew_up: return "blew_up";
    case SolveStatus::unresolved: return "unresolved";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// source integral
// ---------------------------------------------------------------------------

/// Trapezoidal transcription of the triangle integral
///   (1/2) int_0^t int_{x-t+s}^{x+t-s} F(y,s) (1+s)^(-q) dy ds
/// at every lattice node.  Per-row prefix sums reduce the cost to
/// nx * nt^2 / 2.  F is taken to vanish beyond the lattice edge, so values
/// are only meaningful at nodes whose backward triangle avoids nonzero
/// samples on the boundary columns; cone-supported fields on a lattice
/// with x_max >= t_max + k satisfy this everywhere.
inline CharacteristicField apply_L(const CharacteristicField& F, double q) {
  const CharacteristicGrid& g = F.grid;
  const int nt = g.nt;
  const int nx = g.nx;
  const double h = g.h;

  // weighted samples and their row prefix sums
  CharacteristicField W(g);
  std::vector<double> wrow(nt);
  for (int m = 0; m < nt; ++m)
    wrow[m] = std::pow(1.0 + g.t(m), -q);
  for (int m = 0; m < nt; ++m)
    for (int j = 0; j < nx; ++j) W.at(m, j) = F.at(m, j) * wrow[m];
  std::vector<double> prefix(static_cast<std::size_t>(nt) * nx);
  for (int m = 0; m < nt; ++m) {
    double acc = 0.0;
    for (int j = 0; j < nx; ++j) {
      acc += W.at(m, j);
      prefix[static_cast<std::size_t>(m) * nx + j] = acc;
    }
  }
  auto row_sum = [&](int m, int j0, int j1) -> double {
    // trapezoid over columns [j0, j1]; out-of-range samples are zero
    const int a = std::max(j0, 0);
    const int b = std::min(j1, nx - 1);
    if (b < a) return 0.0;
    const double* p = prefix.data() + static_cast<std::size_t>(m) * nx;
    double s = p[b] - (a > 0 ? p[a - 1] : 0.0);
    const double e0 = j0 >= 0 ? W.at(m, j0) : 0.0;
    const double e1 = j1 < nx ? W.at(m, j1) : 0.0;
    return s - 0.5 * (e0 + e1);
  };

  CharacteristicField out(g);
  for (int n = 1; n < nt; ++n) {
    for (int i = 0; i < nx; ++i) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) {
        const int d = n - m;
        const double row = row_sum(m, i - d, i + d);
        acc += (m == 0 ? 0.5 : 1.0) * row;  // s-trapezoid; the m = n row is empty
      }
      out.at(n, i) = 0.5 * h * h * acc;
    }
  }
  return out;
}

inline CharacteristicField apply_L(const CharacteristicField& F,
                                   const ProblemParams& pa) {
  return apply_L(F, pa.p - 1.0);
}

/// Same quadrature evaluated at a single point from a callable, for oracle
/// checks and operator splitting; t must sit on the spacing-h time lattice.
template <class Fn>
double apply_L_point(Fn&& F, double q, double x, double t, double h) {
  const long n = std::lround(t / h);
  if (std::fabs(n * h - t) > 1e-9 * std::max(1.0, t))
    throw std::invalid_argument("apply_L_point: t is not a lattice multiple");
  double acc = 0.0;
  for (long m = 0; m < n; ++m) {
    const double s = m * h;
    const double wt = std::pow(1.0 + s, -q);
    const long d = n - m;
    const double y0 = x - d * h;
    double row = 0.5 * (F(y0, s) + F(x + d * h, s));
    for (long j = 1; j < 2 * d; ++j) row += F(y0 + j * h, s);
    acc += (m == 0 ? 0.5 : 1.0) * wt * row;
  }
  return 0.5 * h * h * acc;
}

/// Triangle integral restricted to y away from the axis reflection,
///   (1/2) int_0^t ds int_{|r-t+s|}^{r+t-s} F(y,s) (1+s)^(-q) dy,
/// the "outgoing" half of the even-integrand decomposition.
template <class Fn>
double l1_quadrature(Fn&& F, double q, double r, double t, double h) {
  const long n = std::lround(t / h);
  if (std::fabs(n * h - t) > 1e-9 * std::max(1.0, t))
    throw std::invalid_argument("l1_quadrature: t is not a lattice multiple");
  const long ir = std::lround(r / h);
  if (std::fabs(ir * h - r) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("l1_quadrature: r is not a lattice multiple");
  double acc = 0.0;
  for (long m = 0; m < n; ++m) {
    const double s = m * h;
    const double wt = std::pow(1.0 + s, -q);
    const long lo = std::labs(ir - (n - m));
    const long hi = ir + (n - m);
    if (hi <= lo) continue;
    double row = 0.5 * (F(lo * h, s) + F(hi * h, s));
    for (long j = lo + 1; j < hi; ++j) row += F(j * h, s);
    acc += (m == 0 ? 0.5 : 1.0) * wt * row;
  }
  return 0.5 * h * h * acc;
}

/// The reflected remainder, int_0^((t-r)+) ds int_0^(t-r-s) F (1+s)^(-q) dy
/// (no 1/2: the reflection doubles it).  L1 + L2 equals the full triangle
/// integral for even integrands.
template <class Fn>
double l2_quadrature(Fn&& F, double q, double r, double t, double h) {
  const long n = std::lround(t / h);
  const long ir = std::lround(r / h);
  if (std::fabs(n * h - t) > 1e-9 * std::max(1.0, t) ||
      std::fabs(ir * h - r) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("l2_quadrature: off-lattice arguments");
  const long top = n - ir;  // rows with s <= t - r
  double acc = 0.0;
  for (long m = 0; m < top; ++m) {
    const double s = m * h;
    const double wt = std::pow(1.0 + s, -q);
    const long hi = top - m;  // y up to t - r - s
    if (hi <= 0) continue;
    double row = 0.5 * (F(0.0, s) + F(hi * h, s));
    for (long j = 1; j < hi; ++j) row += F(j * h, s);
    acc += (m == 0 ? 0.5 : 1.0) * wt * row;
  }
  return h * h * acc;
}

// ---------------------------------------------------------------------------
// marching scheme
// ---------------------------------------------------------------------------

struct MarchOptions {
  double blowup_threshold = 1e8;
  bool nonlinear = true;
  bool record_field = true;
};

/// March output.  times / int_u / int_abs_p hold the accepted rows'
/// trapezoidal x-integrals of u and |u|^p.  When the threshold fires,
/// t_blowup is the triggering row's time; that row is not recorded, and
/// with record_field, rows from it on stay zero.
struct MarchResult {
  CharacteristicGrid grid;
  SolveStatus status = SolveStatus::completed;
  double t_blowup = -1.0;
  std::optional<CharacteristicField> field;
  std::vector<double> times;
  std::vector<double> int_u;
  std::vector<double> int_abs_p;
};

/// Advance the integral equation on the lattice with the parallelogram
/// identity: the linear part is exact, the source adds h^2 times the
/// weighted integrand at the diamond center.
inline MarchResult diamond_march(const DataProfile& pr, const ProblemParams& pa,
                                 const CharacteristicGrid& g,
                                 const MarchOptions& opt = {}) {
  pa.validate_for_solver();
  if (pa.mu != 2.0)
    throw std::invalid_argument(
        "diamond_march: the lattice scheme embeds the mu = 2 source weight");
  if (!(opt.blowup_threshold > 0.0))
    throw std::invalid_argument("diamond_march: threshold must be positive");

  const int nt = g.nt;
  const int nx = g.nx;
  const double h = g.h;
  const double p = pa.p;
  const double eps = pa.eps;

  MarchResult out;
  out.grid = g;
  if (opt.record_field) out.field.emplace(g);

  std::vector<double> prev(nx), cur(nx), next(nx);
  auto accept = [&](const std::vector<double>& row, int n) {
    if (opt.record_field)
      for (int i = 0; i < nx; ++i) out.field->at(n, i) = row[i];
    double su = 0.0, sp = 0.0;
    for (double v : row) {
      su += v;
      sp += pow_abs(v, p);
    }
    out.times.push_back(g.t(n));
    out.int_u.push_back(h * su);
    out.int_abs_p.push_back(h * sp);
  };
  auto sup_of = [](const std::vector<double>& row) {
    double m = 0.0;
    bool finite = true;
    for (double v : row) {
      if (!std::isfinite(v)) finite = false;
      m = std::max(m, std::fabs(v));
    }
    return std::pair{m, finite};
  };

  for (int i = 0; i < nx; ++i) prev[i] = eps * pr.f(g.x(i));
  accept(prev, 0);
  if (nt == 1) return out;

  for (int i = 0; i < nx; ++i) {
    cur[i] = eps * dalembert_u0(pr, g.x(i), h);
    if (opt.nonlinear) cur[i] += 0.5 * h * h * pow_abs(prev[i], p);
  }
  const auto [sup1, finite1] = sup_of(cur);
  if (!finite1) {
    out.status = SolveStatus::unresolved;
    return out;
  }
  if (sup1 >= opt.blowup_threshold) {
    out.status = SolveStatus::blew_up;
    out.t_blowup = g.t(1);
    return out;
  }
  accept(cur, 1);

  for (int n = 1; n + 1 < nt; ++n) {
    const double srcw =
        opt.nonlinear ? h * h * std::pow(1.0 + g.t(n), 1.0 - p) : 0.0;
    next[0] = 0.0;
    next[nx - 1] = 0.0;
    for (int i = 1; i + 1 < nx; ++i) {
      double v = cur[i + 1] + cur[i - 1] - prev[i];
      if (opt.nonlinear) v += srcw * pow_abs(cur[i], p);
      next[i] = v;
    }
    const auto [sup, finite] = sup_of(next);
    if (!finite) {
      out.status = SolveStatus::unresolved;
      return out;
    }
    if (sup >= opt.blowup_threshold) {
      out.status = SolveStatus::blew_up;
      out.t_blowup = g.t(n + 1);
      return out;
    }
    accept(next, n + 1);
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return out;
}

/// Lattice samples of the scaled free evolution eps * u0.
inline CharacteristicField free_field(const DataProfile& pr,
                                      const ProblemParams& pa,
                                      const CharacteristicGrid& g) {
  return field_from_function(
      g, [&](double x, double t) { return pa.eps * dalembert_u0(pr, x, t); });
}

// ---------------------------------------------------------------------------
// weighted norms and Picard iteration
// ---------------------------------------------------------------------------

/// sup of w(|x|, t) |V| over the lattice rows with t <= horizon
/// (the whole lattice when horizon is negative).
inline double weighted_norm(const CharacteristicField& V,
                            const ProblemParams& pa, double horizon = -1.0) {
  const CharacteristicGrid& g = V.grid;
  const PRegime reg = regime_of(pa.p);
  double m = 0.0;
  for (int n = 0; n < g.nt; ++n) {
    const double t = g.t(n);
    if (horizon >= 0.0 && t > horizon + 1e-12) break;
    for (int i = 0; i < g.nx; ++i) {
      double w = 1.0;
      if (reg == PRegime::p_equal_2)
        w = 1.0 / std::log(tau_plus(std::fabs(g.x(i)), t, pa.k));
      else if (reg == PRegime::subcritical_low)
        w = std::pow(tau_plus(std::fabs(g.x(i)), t, pa.k), pa.p - 2.0);
      m = std::max(m, w * std::fabs(V.at(n, i)));
    }
  }
  return m;
}

/// Plain sup norm restricted to t <= horizon.
inline double sup_norm(const CharacteristicField& V, double horizon = -1.0) {
  const CharacteristicGrid& g = V.grid;
  double m = 0.0;
  for (int n = 0; n < g.nt; ++n) {
    if (horizon >= 0.0 && g.t(n) > horizon + 1e-12) break;
    for (int i = 0; i < g.nx; ++i) m = std::max(m, std::fabs(V.at(n, i)));
  }
  return m;
}

struct PicardReport {
  std::vector<double> increments;  // weighted norm of U_l - U_(l-1)
  bool converged = false;
  bool non_contraction = false;
  int iterations = 0;
  double final_norm = 0.0;        // weighted norm of the last correction
  double contraction_ratio = 0.0; // last ratio of consecutive increments
};

struct PicardResult {
  CharacteristicField u;           // eps * u0 + correction
  CharacteristicField correction;  // fixed point of U = L(|eps u0 + U|^p)
  PicardReport report;
};

/// Solve the integral equation by iterating the source map from zero.
/// Stops when the weighted increment drops below tol times the correction
/// norm; five consecutive growing increments raise the non_contraction
/// flag instead of looping forever.
inline PicardResult picard_solve(const DataProfile& pr, const ProblemParams& pa,
                                 const CharacteristicGrid& g, double tol = 1e-10,
                                 int max_iter = 40) {
  pa.validate_for_solver();
  if (pa.mu != 2.0)
    throw std::invalid_argument(
        "picard_solve: the integral equation embeds the mu = 2 source weight");
  const double q = pa.p - 1.0;
  const CharacteristicField lin = free_field(pr, pa, g);

  PicardResult out;
  out.correction = CharacteristicField(g);
  int grew = 0;
  for (int l = 1; l <= max_iter; ++l) {
    CharacteristicField S(g);
    for (std::size_t j = 0; j < S.data.size(); ++j)
      S.data[j] = pow_abs(lin.data[j] + out.correction.data[j], pa.p);
    CharacteristicField Unew = apply_L(S, q);

    CharacteristicField diff(g);
    for (std::size_t j = 0; j < diff.data.size(); ++j)
      diff.data[j] = Unew.data[j] - out.correction.data[j];
    const double inc = weighted_norm(diff, pa);
    out.report.increments.push_back(inc);
    out.report.iterations = l;
    out.correction = std::move(Unew);
    if (!std::isfinite(inc) || inc > 1e150) {
      out.report.non_contraction = true;  // iterates left any contraction ball
      break;
    }

    const std::size_t m = out.report.increments.size();
    if (m >= 2) {
      const double prev = out.report.increments[m - 2];
      out.report.contraction_ratio = prev > 0.0 ? inc / prev : 0.0;
      grew = inc > prev ? grew + 1 : 0;
      if (grew >= 5) {
        out.report.non_contraction = true;
        break;
      }
    }
    out.report.final_norm = weighted_norm(out.correction, pa);
    if (inc <= tol * std::max(out.report.final_norm, 1e-300)) {
      out.report.converged = true;
      break;
    }
  }
  out.u = CharacteristicField(g);
  for (std::size_t j = 0; j < out.u.data.size(); ++j)
    out.u.data[j] = lin.data[j] + out.correction.data[j];
  return out;
}

// ---------------------------------------------------------------------------
// a priori estimate reports
// ---------------------------------------------------------------------------

enum class AprioriLemma { linear_31, annulus_32, main_33, mixed_34 };

/// Measured growth of a weighted sup against its predicted envelope.
/// values[i] is the running weighted sup up to horizon T_values[i], scaled
/// by k^2 where the estimate carries that factor; bound_ratios divides by
/// the envelope.  fitted_exponent regresses log values on the abscissa
/// named by log_corrected; bound_only marks envelopes that may be slack.
struct WeightReport {
  AprioriLemma lemma = AprioriLemma::linear_31;
  std::vector<double> T_values;
  std::vector<double> values;
  std::vector<double> bound_ratios;
  double empirical_constant = 0.0;
  double fitted_exponent = 0.0;
  double expected_exponent = 0.0;
  bool log_corrected = false;
  bool bound_only = false;
  bool skipped = false;
  std::string note;
};

/// Sample one of the four a priori estimates on a lattice of the given
/// resolution, taking running sups at each horizon in T_list (ascending).
inline WeightReport verify_apriori(AprioriLemma lemma, const DataProfile& pr,
                                   const ProblemParams& pa,
                                   std::vector<double> T_list,
                                   int cells_per_k = 16) {
  pa.validate();
  if (T_list.empty()) throw std::invalid_argument("verify_apriori: empty T list");
  if (!std::is_sorted(T_list.begin(), T_list.end()))
    throw std::invalid_argument("verify_apriori: T list must ascend");

  WeightReport rep;
  rep.lemma = lemma;
  rep.T_values = T_list;

  if (lemma == AprioriLemma::annulus_32 && !pr.zero_moment) {
    rep.skipped = true;
    rep.note =
        "annulus support requires a zero moment pair; report skipped";
    return rep;
  }

  const double k = pa.k;
  const double p = pa.p;
  const CharacteristicGrid g = CharacteristicGrid::make(
      k, cells_per_k, T_list.back());

  // integrand field and the envelope this estimate predicts
  CharacteristicField base(g);
  std::vector<double> envelope(T_list.size(), 1.0);
  const PRegime reg = regime_of(p);
  switch (lemma) {
    case AprioriLemma::linear_31:
      base = field_from_function(
          g, [&](double x, double t) { return dalembert_u0(pr, x, t); });
      rep.note = "flat envelope sup|f| + |f+g|_L1";
      break;
    case AprioriLemma::annulus_32:
      base = field_from_function(g, [&](double x, double t) {
        const double r = std::fabs(x);
        return (r >= t - k && r <= t + k) ? 1.0 : 0.0;
      });
      rep.note = "flat envelope";
      break;
    case AprioriLemma::main_33:
      base = field_from_function(g, [&](double x, double t) {
        const double r = std::fabs(x);
        if (r > t + k) return 0.0;
        return std::pow(weight_w(r, t, p, k), -p);
      });
      for (std::size_t j = 0; j < T_list.size(); ++j)
        envelope[j] = growth_D(T_list[j], p, k);
      rep.note = "envelope D(T)";
      break;
    case AprioriLemma::mixed_34:
      base = field_from_function(g, [&](double x, double t) {
        const double r = std::fabs(x);
        if (r < t - k || r > t + k) return 0.0;
        return 1.0 / weight_w(r, t, p, k);
      });
      for (std::size_t j = 0; j < T_list.size(); ++j)
        envelope[j] = std::pow(growth_D(T_list[j], p, k), 1.0 / p);
      rep.bound_only = true;
      rep.note = "envelope D(T)^(1/p); may be slack";
      break;
  }

  // weighted sup of the estimate's left-hand side, running over rows
  CharacteristicField G =
      lemma == AprioriLemma::linear_31 ? std::move(base) : apply_L(base, p - 1.0);
  const double scale = lemma == AprioriLemma::linear_31
                           ? pr.f_sup + pr.fplusg_l1
                           : k * k;
  std::size_t jt = 0;
  double running = 0.0;
  rep.values.assign(T_list.size(), 0.0);
  for (int n = 0; n < g.nt && jt < T_list.size(); ++n) {
    const double t = g.t(n);
    for (int i = 0; i < g.nx; ++i) {
      const double w = lemma == AprioriLemma::linear_31
                           ? 1.0
                           : weight_w(std::fabs(g.x(i)), t, p, k);
      running = std::max(running, w * std::fabs(G.at(n, i)));
    }
    while (jt < T_list.size() && t >= T_list[jt] - 1e-9) {
      rep.values[jt] = running / scale;
      ++jt;
    }
  }
  for (; jt < T_list.size(); ++jt) rep.values[jt] = running / scale;

  rep.bound_ratios.resize(T_list.size());
  for (std::size_t j = 0; j < T_list.size(); ++j) {
    rep.bound_ratios[j] = rep.values[j] / envelope[j];
    rep.empirical_constant =
        std::max(rep.empirical_constant, rep.bound_ratios[j]);
  }

  // growth exponent in the normalized horizon
  std::vector<double> xs(T_list.size()), ys(T_list.size());
  for (std::size_t j = 0; j < T_list.size(); ++j) {
    const double Tk = (T_list[j] + 2.0 * k) / k;
    xs[j] = std::log(Tk);
    ys[j] = std::log(std::max(rep.values[j], 1e-300));
  }
  switch (lemma) {
    case AprioriLemma::linear_31:
    case AprioriLemma::annulus_32:
      rep.expected_exponent = 0.0;
      break;
    case AprioriLemma::main_33:
      if (reg == PRegime::subcritical_low)
        rep.expected_exponent = 0.5 * gamma_exponent(p, 3.0);
      else if (reg == PRegime::subcritical_high)
        rep.expected_exponent = 3.0 - p;
      else if (reg == PRegime::p_equal_2) {
        // divide the log factor out and expect the remaining power 1
        for (std::size_t j = 0; j < T_list.size(); ++j) ys[j] -= std::log(xs[j]);
        rep.expected_exponent = 1.0;
        rep.log_corrected = true;
      } else {  // critical: purely logarithmic growth
        for (std::size_t j = 0; j < T_list.size(); ++j) xs[j] = std::log(xs[j]);
        rep.expected_exponent = 1.0;
        rep.log_corrected = true;
      }
      break;
    case AprioriLemma::mixed_34:
      // the envelope may be slack, so regress the bound ratios instead:
      // any slope at or below zero means the bound absorbs the growth
      for (std::size_t j = 0; j < T_list.size(); ++j)
        ys[j] = std::log(std::max(rep.bound_ratios[j], 1e-300));
      rep.expected_exponent = 0.0;
      break;
  }
  rep.fitted_exponent = fit_line(xs, ys).slope;
  return rep;
}

// ---------------------------------------------------------------------------
// weight interpolation inequality
// ---------------------------------------------------------------------------

/// Check 1/(1+s) <= 4 ((alpha+2k)/k)^(-theta) ((beta+2k)/k)^(theta-1) at
/// s = (alpha+beta)/2.  Requires k > 1, alpha >= 0, beta >= -k,
/// alpha + beta >= 0, theta in [0,1].
inline bool interpolation_bound_check(double theta, double alpha, double beta,
                                      double k) {
  if (!(k > 1.0) || !(alpha >= 0.0) || !(beta >= -k) || alpha + beta < 0.0 ||
      !(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("interpolation_bound_check: out of domain");
  const double s = 0.5 * (alpha + beta);
  const double lhs = 1.0 / (1.0 + s);
  const double rhs = 4.0 * std::pow((alpha + 2.0 * k) / k, -theta) *
                     std::pow((beta + 2.0 * k) / k, theta - 1.0);
  return lhs <= rhs * (1.0 + 1e-12);
}

struct FuzzReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_margin = INFINITY;  // min over samples of rhs - lhs
};

/// Randomized sweep of the interpolation inequality over its domain.
inline FuzzReport interpolation_fuzz(std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uk(1.0 + 1e-9, 50.0);
  std::uniform_real_distribution<double> ua(0.0, 200.0);
  std::uniform_real_distribution<double> uth(0.0, 1.0);
  FuzzReport rep;
  rep.samples = samples;
  for (std::size_t it = 0; it < samples; ++it) {
    const double k = uk(rng);
    const double theta = it % 17 == 0 ? (it % 2 ? 1.0 : 0.0) : uth(rng);
    double alpha = ua(rng);
    std::uniform_real_distribution<double> ub(-k, 200.0);
    double beta = ub(rng);
    while (alpha + beta < 0.0) {
      alpha = ua(rng);
      beta = ub(rng);
    }
    const double s = 0.5 * (alpha + beta);
    const double lhs = 1.0 / (1.0 + s);
    const double rhs = 4.0 * std::pow((alpha + 2.0 * k) / k, -theta) *
                       std::pow((beta + 2.0 * k) / k, theta - 1.0);
    rep.worst_margin = std::min(rep.worst_margin, rhs - lhs);
    if (!interpolation_bound_check(theta, alpha, beta, k)) ++rep.violations;
  }
  return rep;
}

}  // namespace dwlab
