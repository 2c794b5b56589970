#pragma once

// Uniform-grid leapfrog schemes for the damped equation and for its
// normalized form, plus a self-convergence estimator.  These serve as an
// independent cross-check of the characteristic lattice scheme: different
// stencil, different time step, same continuum limit.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dwlab/duhamel.hpp"
#include "dwlab/initial_data.hpp"
#include "dwlab/scaling.hpp"

namespace dwlab {

struct UniformGrid {
  double dx = 0.0;
  double dt = 0.0;
  double x_max = 0.0;
  double t_max = 0.0;
  double k = 0.0;
  int nx = 0;
  int nsteps = 0;

  double cfl() const { return dt / dx; }
  double x(int i) const { return -x_max + dx * i; }

  /// Grid with spacing k / cells_per_k, time step at most cfl_target * dx
  /// and an integer number of steps landing exactly on t_max.
  static UniformGrid make(double k, int cells_per_k, double t_max,
                          double cfl_target = 0.9) {
    if (!(k > 1.0)) throw std::invalid_argument("UniformGrid: need k > 1");
    if (cells_per_k < 1)
      throw std::invalid_argument("UniformGrid: cells_per_k >= 1");
    if (!(t_max > 0.0)) throw std::invalid_argument("UniformGrid: t_max > 0");
    if (!(cfl_target > 0.0) || cfl_target > 0.9)
      throw std::invalid_argument("UniformGrid: cfl target in (0, 0.9]");
    UniformGrid g;
    g.k = k;
    g.dx = k / cells_per_k;
    g.nsteps = static_cast<int>(std::ceil(t_max / (cfl_target * g.dx) - 1e-9));
    g.dt = t_max / g.nsteps;
    g.t_max = t_max;
    const int m = static_cast<int>(std::ceil((t_max + k) / g.dx - 1e-9)) + 2;
    g.x_max = m * g.dx;
    g.nx = 2 * m + 1;
    if (g.cfl() > 0.9 + 1e-12)
      throw std::invalid_argument("UniformGrid: CFL limit exceeded");
    return g;
  }

  /// Like make, but rounds nsteps up to a multiple of slices so the times
  /// j * t_max / slices land exactly on steps (for snapshot comparisons).
  static UniformGrid make_aligned(double k, int cells_per_k, double t_max,
                                  int slices, double cfl_target = 0.9) {
    if (slices < 1) throw std::invalid_argument("UniformGrid: slices >= 1");
    UniformGrid g = make(k, cells_per_k, t_max, cfl_target);
    const int q = (g.nsteps + slices - 1) / slices;
    g.nsteps = q * slices;
    g.dt = t_max / g.nsteps;
    return g;
  }
};

struct FDOptions {
  double blowup_threshold = 1e8;
  bool nonlinear = true;
  std::vector<double> snapshot_times;  // must be multiples of dt
  bool record_levels = false;
};

struct FDResult {
  UniformGrid grid;
  SolveStatus status = SolveStatus::completed;
  double t_blowup = -1.0;
  std::vector<double> final_level;       // last accepted row
  double final_time = 0.0;
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;
  std::vector<double> times;                  // with record_levels
  std::vector<std::vector<double>> levels;    // with record_levels
};

namespace detail {

template <class FirstStep, class Step>
FDResult run_leapfrog(const UniformGrid& g, const FDOptions& opt,
                      std::vector<double> v0, FirstStep&& first, Step&& step) {
  const int nx = g.nx;
  FDResult out;
  out.grid = g;

  std::vector<double> snap_left = opt.snapshot_times;
  std::sort(snap_left.begin(), snap_left.end());
  auto take_snapshot = [&](const std::vector<double>& row, double t) {
    while (!snap_left.empty() && t >= snap_left.front() - 1e-9 * (1.0 + t)) {
      if (std::fabs(t - snap_left.front()) > 1e-6)
        throw std::invalid_argument("snapshot time is not a step multiple");
      out.snapshot_times.push_back(t);
      out.snapshots.push_back(row);
      snap_left.erase(snap_left.begin());
    }
  };
  auto record = [&](const std::vector<double>& row, double t) {
    if (opt.record_levels) {
      out.times.push_back(t);
      out.levels.push_back(row);
    }
    take_snapshot(row, t);
    out.final_level = row;
    out.final_time = t;
  };
  auto scan = [&](const std::vector<double>& row) {
    double m = 0.0;
    bool finite = true;
    for (double v : row) {
      if (!std::isfinite(v)) finite = false;
      m = std::max(m, std::fabs(v));
    }
    return std::pair{m, finite};
  };

  std::vector<double> prev = std::move(v0), cur(nx), next(nx);
  record(prev, 0.0);
  if (g.nsteps == 0) return out;

  first(prev, cur);
  cur[0] = cur[nx - 1] = 0.0;
  auto [s1, f1] = scan(cur);
  if (!f1) {
    out.status = SolveStatus::unresolved;
    return out;
  }
  if (s1 >= opt.blowup_threshold) {
    out.status = SolveStatus::blew_up;
    out.t_blowup = g.dt;
    return out;
  }
  record(cur, g.dt);

  for (int n = 1; n < g.nsteps; ++n) {
    const double t = n * g.dt;
    step(prev, cur, t, next);
    next[0] = next[nx - 1] = 0.0;
    const auto [sup, finite] = scan(next);
    if (!finite) {
      out.status = SolveStatus::unresolved;
      return out;
    }
    if (sup >= opt.blowup_threshold) {
      out.status = SolveStatus::blew_up;
      out.t_blowup = (n + 1) * g.dt;
      return out;
    }
    record(next, (n + 1) * g.dt);
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return out;
}

}  // namespace detail

/// Damped form: v_tt - v_xx + mu/(1+t) v_t = |v|^p, data (eps f, eps g).
/// Leapfrog with the damping term averaged over the two time levels, which
/// keeps the update explicit and second order.
inline FDResult solve_ivp1(const DataProfile& pr, const ProblemParams& pa,
                           const UniformGrid& g, const FDOptions& opt = {}) {
  pa.validate_for_solver();
  const int nx = g.nx;
  const double dt = g.dt;
  const double r2 = (dt / g.dx) * (dt / g.dx);
  const double p = pa.p;
  const double mu = pa.mu;

  std::vector<double> v0(nx);
  for (int i = 0; i < nx; ++i) v0[i] = pa.eps * pr.f(g.x(i));

  auto first = [&](const std::vector<double>& a, std::vector<double>& b) {
    for (int i = 1; i + 1 < nx; ++i) {
      const double vel = pa.eps * pr.g(g.x(i));
      double acc = (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (g.dx * g.dx) - mu * vel;
      if (opt.nonlinear) acc += pow_abs(a[i], p);
      b[i] = a[i] + dt * vel + 0.5 * dt * dt * acc;
    }
  };
  auto step = [&](const std::vector<double>& prev, const std::vector<double>& cur,
                  double t, std::vector<double>& next) {
    const double lam = 0.5 * mu * dt / (1.0 + t);
    const double src = opt.nonlinear ? dt * dt : 0.0;
    for (int i = 1; i + 1 < nx; ++i) {
      double v = 2.0 * cur[i] - (1.0 - lam) * prev[i] +
                 r2 * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]);
      if (opt.nonlinear) v += src * pow_abs(cur[i], p);
      next[i] = v / (1.0 + lam);
    }
  };
  return detail::run_leapfrog(g, opt, std::move(v0), first, step);
}

/// Normalized form: u_tt - u_xx + mu(2-mu)/(4(1+t)^2) u = |u|^p (1+t)^(-mu(p-1)/2),
/// data (eps f, eps (mu f / 2 + g)).  At mu = 2 the mass term vanishes and
/// the source weight matches the characteristic scheme's.
inline FDResult solve_ivp2(const DataProfile& pr, const ProblemParams& pa,
                           const UniformGrid& g, const FDOptions& opt = {}) {
  pa.validate_for_solver();
  const int nx = g.nx;
  const double dt = g.dt;
  const double r2 = (dt / g.dx) * (dt / g.dx);
  const double p = pa.p;
  const double mu = pa.mu;
  const double sigma = 0.5 * mu * (p - 1.0);
  const double mass0 = 0.25 * mu * (2.0 - mu);

  std::vector<double> u0(nx);
  for (int i = 0; i < nx; ++i) u0[i] = pa.eps * pr.f(g.x(i));

  auto first = [&](const std::vector<double>& a, std::vector<double>& b) {
    for (int i = 1; i + 1 < nx; ++i) {
      const double vel =
          pa.eps * (0.5 * mu * pr.f(g.x(i)) + pr.g(g.x(i)));
      double acc =
          (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (g.dx * g.dx) - mass0 * a[i];
      if (opt.nonlinear) acc += pow_abs(a[i], p);
      b[i] = a[i] + dt * vel + 0.5 * dt * dt * acc;
    }
  };
  auto step = [&](const std::vector<double>& prev, const std::vector<double>& cur,
                  double t, std::vector<double>& next) {
    const double mass = mass0 / ((1.0 + t) * (1.0 + t));
    const double srcw = opt.nonlinear ? dt * dt * std::pow(1.0 + t, -sigma) : 0.0;
    for (int i = 1; i + 1 < nx; ++i) {
      double v = 2.0 * cur[i] - prev[i] +
                 r2 * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) -
                 dt * dt * mass * cur[i];
      if (opt.nonlinear) v += srcw * pow_abs(cur[i], p);
      next[i] = v;
    }
  };
  return detail::run_leapfrog(g, opt, std::move(u0), first, step);
}

enum class SolverScheme { march_ivp2, fd_ivp1, fd_ivp2 };

struct ConvergenceReport {
  std::vector<int> resolutions;
  std::vector<double> errors;  // sup distance to the finest run
  std::vector<double> orders;  // log2 ratios of consecutive errors
  double order = 0.0;          // mean observed order
  bool monotone = true;
};

/// Self-convergence under dyadic refinement: run each resolution to t_eval,
/// compare against the finest run on the shared coarse nodes, and report
/// the observed order.  Resolutions must double.
inline ConvergenceReport convergence_order(SolverScheme scheme,
                                           const DataProfile& pr,
                                           const ProblemParams& pa,
                                           std::vector<int> resolutions,
                                           double t_eval,
                                           double cfl_target = 0.9) {
  if (resolutions.size() < 3)
    throw std::invalid_argument("convergence_order: need >= 3 resolutions");
  for (std::size_t j = 1; j < resolutions.size(); ++j)
    if (resolutions[j] != 2 * resolutions[j - 1])
      throw std::invalid_argument("convergence_order: resolutions must double");

  struct Run {
    double dx = 0.0;
    double x_max = 0.0;
    std::vector<double> level;
  };
  std::vector<Run> runs;
  for (int N : resolutions) {
    Run r;
    if (scheme == SolverScheme::march_ivp2) {
      const auto g = CharacteristicGrid::make(pa.k, N, t_eval);
      if (std::fabs(g.t_max - t_eval) > 1e-9)
        throw std::invalid_argument("convergence_order: t_eval off lattice");
      const auto res = diamond_march(pr, pa, g);
      if (res.status != SolveStatus::completed)
        throw NumericalError("convergence_order: run did not complete");
      r.dx = g.h;
      r.x_max = g.x_max;
      r.level.resize(g.nx);
      for (int i = 0; i < g.nx; ++i) r.level[i] = res.field->at(g.nt - 1, i);
    } else {
      const auto g = UniformGrid::make(pa.k, N, t_eval, cfl_target);
      const auto res = scheme == SolverScheme::fd_ivp1
                           ? solve_ivp1(pr, pa, g)
                           : solve_ivp2(pr, pa, g);
      if (res.status != SolveStatus::completed)
        throw NumericalError("convergence_order: run did not complete");
      r.dx = g.dx;
      r.x_max = g.x_max;
      r.level = res.final_level;
    }
    runs.push_back(std::move(r));
  }

  const Run& fine = runs.back();
  ConvergenceReport rep;
  rep.resolutions = resolutions;
  for (std::size_t j = 0; j + 1 < runs.size(); ++j) {
    const Run& c = runs[j];
    double err = 0.0;
    for (std::size_t i = 0; i < c.level.size(); ++i) {
      const double x = -c.x_max + c.dx * static_cast<double>(i);
      const long fi = std::lround((x + fine.x_max) / fine.dx);
      if (fi < 0 || fi >= static_cast<long>(fine.level.size())) continue;
      if (std::fabs(-fine.x_max + fine.dx * fi - x) > 1e-9) continue;
      err = std::max(err, std::fabs(c.level[i] - fine.level[fi]));
    }
    rep.errors.push_back(err);
  }
  for (std::size_t j = 0; j + 1 < rep.errors.size(); ++j) {
    if (rep.errors[j + 1] <= 0.0 || rep.errors[j] <= rep.errors[j + 1])
      rep.monotone = false;
    if (rep.errors[j + 1] > 0.0)
      rep.orders.push_back(std::log2(rep.errors[j] / rep.errors[j + 1]));
  }
  for (double o : rep.orders) rep.order += o;
  if (!rep.orders.empty()) rep.order /= static_cast<double>(rep.orders.size());
  return rep;
}

}  // namespace dwlab
