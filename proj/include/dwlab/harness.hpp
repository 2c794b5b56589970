#pragma once

// Sweep orchestration: run lifespan measurements over an epsilon grid with
// any of the three solvers, confirm blow-up times across resolutions, fit
// scaling exponents in each model's linearizing coordinates, and persist
// records / fits / a plot script.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dwlab/config.hpp"
#include "dwlab/duhamel.hpp"
#include "dwlab/fd.hpp"
#include "dwlab/functional.hpp"
#include "dwlab/initial_data.hpp"
#include "dwlab/numerics.hpp"
#include "dwlab/scaling.hpp"

namespace dwlab {

enum class SolverKind { diamond, fd, ode };

inline std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::diamond: return "diamond";
    case SolverKind::fd: return "fd";
    default: return "ode";
  }
}

inline SolverKind solver_from_string(const std::string& s) {
  if (s == "diamond") return SolverKind::diamond;
  if (s == "fd") return SolverKind::fd;
  if (s == "ode") return SolverKind::ode;
  throw std::invalid_argument("unknown solver '" + s + "'");
}

inline BumpKind bump_from_string(const std::string& s) {
  if (s == "poly") return BumpKind::poly_bump;
  if (s == "cosine") return BumpKind::cosine_bump;
  throw std::invalid_argument("unknown bump '" + s + "'");
}

inline std::string to_string(BumpKind b) {
  return b == BumpKind::poly_bump ? "poly" : "cosine";
}

inline DataMode mode_from_string(const std::string& s) {
  if (s == "thm22") return DataMode::thm22;
  if (s == "zero_moment") return DataMode::zero_moment_general;
  if (s == "free") return DataMode::free_data;
  throw std::invalid_argument("unknown data mode '" + s + "'");
}

inline std::string to_string(DataMode m) {
  switch (m) {
    case DataMode::thm22: return "thm22";
    case DataMode::zero_moment_general: return "zero_moment";
    default: return "free";
  }
}

struct ExperimentConfig {
  double p = 2.0;
  double mu = 2.0;
  double k = 2.0;
  std::vector<double> eps_list = {1.0, 0.7, 0.5, 0.35};  // kept descending
  std::vector<int> resolutions = {64, 128};              // powers of two
  SolverKind solver = SolverKind::diamond;
  BumpKind bump = BumpKind::poly_bump;
  DataMode mode = DataMode::thm22;
  double amplitude = 1.0;
  double t_max = 100.0;
  double blowup_threshold = 1e8;
  double cfl = 0.9;
  double ode_rtol = 1e-10;
  double ode_t_cap = 1e290;
  std::uint64_t seed = 1234;

  void validate() const {
    ProblemParams pa;
    pa.p = p;
    pa.mu = mu;
    pa.k = k;
    pa.eps = eps_list.empty() ? 1.0 : eps_list.front();
    pa.validate();
    for (std::size_t i = 1; i < eps_list.size(); ++i)
      if (!(eps_list[i] < eps_list[i - 1]))
        throw std::invalid_argument("eps list must be strictly descending");
    for (double e : eps_list)
      if (!(e > 0.0)) throw std::invalid_argument("eps must be positive");
    if (resolutions.empty())
      throw std::invalid_argument("need at least one resolution");
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
      const int N = resolutions[i];
      if (N < 1 || (N & (N - 1)) != 0)
        throw std::invalid_argument("resolutions must be powers of two");
      if (i > 0 && resolutions[i] <= resolutions[i - 1])
        throw std::invalid_argument("resolutions must be ascending");
    }
    if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    if (!(blowup_threshold > 1.0))
      throw std::invalid_argument("blowup threshold too small");
    if (!(cfl > 0.0) || cfl > 0.9)
      throw std::invalid_argument("cfl must lie in (0, 0.9]");
    if (!(ode_rtol > 0.0) || ode_rtol > 1e-2)
      throw std::invalid_argument("ode_rtol out of range");
  }

  static ExperimentConfig from_config(const Config& cfg) {
    ExperimentConfig ec;
    ec.p = cfg.get_double("p", ec.p);
    ec.mu = cfg.get_double("mu", ec.mu);
    ec.k = cfg.get_double("k", ec.k);
    if (cfg.has("eps")) ec.eps_list = cfg.get_list("eps");
    std::sort(ec.eps_list.rbegin(), ec.eps_list.rend());
    if (cfg.has("resolutions")) {
      ec.resolutions.clear();
      for (double r : cfg.get_list("resolutions")) {
        const int N = static_cast<int>(std::lround(r));
        if (std::fabs(r - N) > 1e-9)
          throw std::invalid_argument("resolutions must be integers");
        ec.resolutions.push_back(N);
      }
      std::sort(ec.resolutions.begin(), ec.resolutions.end());
    }
    ec.solver = solver_from_string(cfg.get_str("solver", "diamond"));
    ec.bump = bump_from_string(cfg.get_str("bump", "poly"));
    ec.mode = mode_from_string(cfg.get_str("mode", "thm22"));
    ec.amplitude = cfg.get_double("amplitude", ec.amplitude);
    ec.t_max = cfg.get_double("t_max", ec.t_max);
    ec.blowup_threshold = cfg.get_double("blowup_threshold", ec.blowup_threshold);
    ec.cfl = cfg.get_double("cfl", ec.cfl);
    ec.ode_rtol = cfg.get_double("ode_rtol", ec.ode_rtol);
    ec.ode_t_cap = cfg.get_double("ode_t_cap", ec.ode_t_cap);
    ec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1234));
    ec.validate();
    return ec;
  }

  Config to_config() const {
    Config cfg;
    cfg.set_double("p", p);
    cfg.set_double("mu", mu);
    cfg.set_double("k", k);
    std::string eps = "[";
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", eps_list[i]);
      eps += (i ? ", " : "") + std::string(buf);
    }
    cfg.set("eps", eps + "]");
    std::string res = "[";
    for (std::size_t i = 0; i < resolutions.size(); ++i)
      res += (i ? ", " : "") + std::to_string(resolutions[i]);
    cfg.set("resolutions", res + "]");
    cfg.set("solver", dwlab::to_string(solver));
    cfg.set("bump", dwlab::to_string(bump));
    cfg.set("mode", dwlab::to_string(mode));
    cfg.set_double("amplitude", amplitude);
    cfg.set_double("t_max", t_max);
    cfg.set_double("blowup_threshold", blowup_threshold);
    cfg.set_double("cfl", cfl);
    cfg.set_double("ode_rtol", ode_rtol);
    cfg.set_double("ode_t_cap", ode_t_cap);
    cfg.set("seed", std::to_string(seed));
    return cfg;
  }

  ProblemParams problem(double eps) const {
    ProblemParams pa;
    pa.p = p;
    pa.n = 1;
    pa.mu = mu;
    pa.k = k;
    pa.eps = eps;
    return pa;
  }
};

struct LifespanRecord {
  double eps = 0.0;
  double p = 0.0;
  SolverKind solver = SolverKind::diamond;
  double h = 0.0;          // grid step; for the ode solver, the rtol knob
  double t_blowup = -1.0;  // -1 when not resolved
  std::string status;      // confirmed / unconfirmed / completed / unresolved
  double walltime = 0.0;
};

namespace detail {

struct RawRun {
  SolveStatus status = SolveStatus::unresolved;
  double t_blowup = -1.0;
  double walltime = 0.0;
};

inline RawRun one_run(const ExperimentConfig& ec, double eps, int N,
                      double rtol_override = -1.0) {
  const auto t0 = std::chrono::steady_clock::now();
  RawRun out;
  try {
    const auto pr = make_bump_pair(ec.bump, ec.k, ec.mode, ec.amplitude);
    const auto pa = ec.problem(eps);
    if (ec.solver == SolverKind::diamond) {
      const auto g = CharacteristicGrid::make(ec.k, N, ec.t_max);
      MarchOptions opt;
      opt.blowup_threshold = ec.blowup_threshold;
      opt.record_field = false;
      const auto res = diamond_march(pr, pa, g, opt);
      out.status = res.status;
      out.t_blowup = res.t_blowup;
    } else if (ec.solver == SolverKind::fd) {
      const auto g = UniformGrid::make(ec.k, N, ec.t_max, ec.cfl);
      FDOptions opt;
      opt.blowup_threshold = ec.blowup_threshold;
      const auto res = solve_ivp2(pr, pa, g, opt);
      out.status = res.status;
      out.t_blowup = res.t_blowup;
    } else {
      OdeOptions opt;
      opt.rtol = rtol_override > 0.0 ? rtol_override : ec.ode_rtol;
      opt.t_cap = ec.ode_t_cap;
      const auto res = ode_comparison_lifespan(pr, pa, opt);
      out.status = res.status;
      out.t_blowup = res.t_blowup;
    }
  } catch (const std::exception&) {
    out.status = SolveStatus::unresolved;
    out.t_blowup = -1.0;
  }
  out.walltime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

inline bool within_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace detail

/// One record per (eps, resolution) for the PDE solvers; one record per eps
/// for the ode solver (verified by an rtol/10 rerun).  A blow-up row is
/// "confirmed" when an adjacent resolution's blow-up time agrees within 5%.
/// Individual run failures become "unresolved" rows; the sweep never aborts.
/// Output is sorted by (eps descending, h ascending).
inline std::vector<LifespanRecord> run_sweep(const ExperimentConfig& ec,
                                             bool parallel = true) {
  ec.validate();
  const bool is_ode = ec.solver == SolverKind::ode;
  const std::size_t per_eps = is_ode ? 2 : ec.resolutions.size();
  const std::size_t n_tasks = ec.eps_list.size() * per_eps;

  std::vector<detail::RawRun> raw(n_tasks);
  auto task = [&](std::size_t idx) {
    const std::size_t ie = idx / per_eps;
    const std::size_t ir = idx % per_eps;
    const double eps = ec.eps_list[ie];
    if (is_ode)
      return detail::one_run(ec, eps, 0,
                             ir == 0 ? ec.ode_rtol : ec.ode_rtol / 10.0);
    return detail::one_run(ec, eps, ec.resolutions[ir]);
  };

  if (parallel) {
    std::vector<std::future<detail::RawRun>> futs;
    futs.reserve(n_tasks);
    for (std::size_t i = 0; i < n_tasks; ++i)
      futs.push_back(std::async(std::launch::async | std::launch::deferred,
                                task, i));
    for (std::size_t i = 0; i < n_tasks; ++i) raw[i] = futs[i].get();
  } else {
    for (std::size_t i = 0; i < n_tasks; ++i) raw[i] = task(i);
  }

  std::vector<LifespanRecord> out;
  for (std::size_t ie = 0; ie < ec.eps_list.size(); ++ie) {
    const double eps = ec.eps_list[ie];
    if (is_ode) {
      const auto& a = raw[ie * 2];
      const auto& b = raw[ie * 2 + 1];
      LifespanRecord rec;
      rec.eps = eps;
      rec.p = ec.p;
      rec.solver = ec.solver;
      rec.h = ec.ode_rtol;
      rec.t_blowup = a.t_blowup;
      rec.walltime = a.walltime + b.walltime;
      if (a.status == SolveStatus::blew_up) {
        rec.status = (b.status == SolveStatus::blew_up &&
                      detail::within_rel(a.t_blowup, b.t_blowup, 0.05))
                         ? "confirmed"
                         : "unconfirmed";
      } else {
        rec.status =
            a.status == SolveStatus::completed ? "completed" : "unresolved";
        rec.t_blowup = -1.0;
      }
      out.push_back(rec);
      continue;
    }
    // PDE rows, finest first so h ascends within this eps
    const std::size_t nr = ec.resolutions.size();
    for (std::size_t j = 0; j < nr; ++j) {
      const std::size_t ir = nr - 1 - j;
      const auto& r = raw[ie * per_eps + ir];
      LifespanRecord rec;
      rec.eps = eps;
      rec.p = ec.p;
      rec.solver = ec.solver;
      rec.h = ec.k / ec.resolutions[ir];
      rec.t_blowup = r.t_blowup;
      rec.walltime = r.walltime;
      if (r.status == SolveStatus::blew_up) {
        bool agrees = false;
        for (int d : {-1, +1}) {
          const long jn = static_cast<long>(ir) + d;
          if (jn < 0 || jn >= static_cast<long>(nr)) continue;
          const auto& nb = raw[ie * per_eps + jn];
          if (nb.status == SolveStatus::blew_up &&
              detail::within_rel(r.t_blowup, nb.t_blowup, 0.05))
            agrees = true;
        }
        rec.status = agrees ? "confirmed" : "unconfirmed";
      } else if (r.status == SolveStatus::completed) {
        rec.status = "completed";
        rec.t_blowup = -1.0;
      } else {
        rec.status = "unresolved";
        rec.t_blowup = -1.0;
      }
      out.push_back(rec);
    }
  }
  return out;
}

enum class FitModel { power, b_eps, exponential };

inline std::string to_string(FitModel m) {
  switch (m) {
    case FitModel::power: return "power";
    case FitModel::b_eps: return "b_eps";
    default: return "exponential";
  }
}

inline FitModel fit_model_from_string(const std::string& s) {
  if (s == "power") return FitModel::power;
  if (s == "b_eps") return FitModel::b_eps;
  if (s == "exponential") return FitModel::exponential;
  throw std::invalid_argument("unknown fit model '" + s + "'");
}

struct ScalingFit {
  FitModel model = FitModel::power;
  double exponent = 0.0;   // slope in linearizing coordinates
  double stderr_ = 0.0;
  double intercept = 0.0;  // 0 for the through-origin b_eps model
  double theory_exponent = std::numeric_limits<double>::quiet_NaN();
  double rel_deviation = std::numeric_limits<double>::quiet_NaN();
  double spread = std::numeric_limits<double>::quiet_NaN();  // b_eps only
  long n_points = 0;
  double p = 0.0;
};

namespace detail {

/// Finest confirmed blow-up row per eps, eps descending.
inline std::vector<LifespanRecord> fit_rows(
    const std::vector<LifespanRecord>& records) {
  std::vector<LifespanRecord> rows;
  for (const auto& r : records) {
    if (r.status != "confirmed" || !(r.t_blowup > 0.0)) continue;
    bool replaced = false;
    for (auto& kept : rows)
      if (kept.eps == r.eps) {
        if (r.h < kept.h) kept = r;
        replaced = true;
        break;
      }
    if (!replaced) rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(),
            [](const LifespanRecord& a, const LifespanRecord& b) {
              return a.eps > b.eps;
            });
  return rows;
}

}  // namespace detail

/// Least squares in the model's linearizing coordinates.  Uses the finest
/// confirmed record per eps; requires at least 4 of them.
inline ScalingFit fit_exponent(const std::vector<LifespanRecord>& records,
                               FitModel model) {
  const auto rows = detail::fit_rows(records);
  if (rows.size() < 4)
    throw NumericalError("fit needs at least 4 confirmed records");
  ScalingFit fit;
  fit.model = model;
  fit.n_points = static_cast<long>(rows.size());
  fit.p = rows.front().p;
  for (const auto& r : rows)
    if (r.p != fit.p) throw std::invalid_argument("records mix p values");
  if (model == FitModel::exponential)
    for (const auto& r : rows)
      if (r.solver != SolverKind::ode)
        throw std::invalid_argument(
            "exponential-regime fits accept only ode records: direct PDE "
            "simulation cannot reach exp-scale lifespans");

  std::vector<double> xs, ys;
  if (model == FitModel::b_eps) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
      const double b = solve_b(r.eps);
      xs.push_back(b);
      ys.push_back(r.t_blowup);
      const double ratio = r.t_blowup / b;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    const auto lf = fit_through_origin(xs, ys);
    fit.exponent = lf.slope;
    fit.intercept = 0.0;
    fit.spread = hi / lo;
    fit.stderr_ = lf.slope_stderr;
  } else {
    for (const auto& r : rows) {
      xs.push_back(std::log(1.0 / r.eps));
      if (model == FitModel::power) {
        ys.push_back(std::log(r.t_blowup));
      } else {
        if (!(r.t_blowup > 1.0))
          throw NumericalError("exponential fit needs t_blowup > 1");
        ys.push_back(std::log(std::log(r.t_blowup)));
      }
    }
    const auto lf = fit_line(xs, ys);
    fit.exponent = lf.slope;
    fit.intercept = lf.intercept;
    fit.stderr_ = lf.slope_stderr;
  }

  // reference exponent for this p when the model matches the predicted form
  ProblemParams pa;
  pa.p = fit.p;
  pa.n = 1;
  pa.mu = 2.0;
  pa.eps = rows.front().eps;
  try {
    const auto pred = predicted_lifespan(pa.eps, pa, LifespanReference::new_1d);
    const bool matches =
        (model == FitModel::power && pred.form == LifespanForm::power) ||
        (model == FitModel::b_eps && pred.form == LifespanForm::b_eps) ||
        (model == FitModel::exponential &&
         pred.form == LifespanForm::exponential);
    if (matches && pred.form != LifespanForm::b_eps) {
      fit.theory_exponent = pred.exponent;
      fit.rel_deviation =
          std::fabs(fit.exponent - pred.exponent) / std::fabs(pred.exponent);
    }
  } catch (const std::exception&) {
    // keep NaN reference when no prediction applies
  }
  return fit;
}

struct TheoryComparison {
  FitModel model = FitModel::power;
  double measured = 0.0;
  double predicted = 0.0;
  double rel_deviation = 0.0;
  double tolerance = 0.1;
  bool pass = false;
  double heat_exponent = 0.0;  // the single-derivative diffusion reference
  bool outlives_heat = false;  // larger exponent means a longer lifespan
};

/// Verdict on a fitted exponent vs the predicted one, plus the diffusion
/// reference showing the measured lifespans outlive that prediction.
inline TheoryComparison compare_with_theory(const ScalingFit& fit,
                                            double tolerance = 0.10) {
  if (fit.model == FitModel::b_eps)
    throw std::invalid_argument(
        "b_eps fits are judged by ratio spread, not an exponent comparison");
  if (std::isnan(fit.theory_exponent))
    throw std::invalid_argument("fit has no matching predicted form");
  TheoryComparison cmp;
  cmp.model = fit.model;
  cmp.measured = fit.exponent;
  cmp.predicted = fit.theory_exponent;
  cmp.rel_deviation = fit.rel_deviation;
  cmp.tolerance = tolerance;
  cmp.pass = cmp.rel_deviation <= tolerance;

  ProblemParams pa;
  pa.p = fit.p;
  pa.n = 1;
  pa.mu = 2.0;
  pa.eps = 1.0;
  if (fit.model == FitModel::power) {
    const auto heat = predicted_lifespan(1.0, pa, LifespanReference::heat);
    cmp.heat_exponent = heat.exponent;
  } else {
    cmp.heat_exponent = fit.p - 1.0;  // diffusion exponential rate
  }
  cmp.outlives_heat = cmp.measured > cmp.heat_exponent;
  return cmp;
}

/// max/min spread of t_blowup / b(eps) over the confirmed rows.
inline double b_eps_ratio_spread(const std::vector<LifespanRecord>& records) {
  const auto rows = detail::fit_rows(records);
  if (rows.empty()) throw NumericalError("no confirmed records");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    const double ratio = r.t_blowup / solve_b(r.eps);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return hi / lo;
}

inline const char* records_csv_header() {
  return "eps,p,solver,h,t_blowup,status,walltime";
}

inline void write_records_csv(const std::string& path,
                              const std::vector<LifespanRecord>& records) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw IoError("cannot open for writing", path);
  std::fprintf(fp, "%s\n", records_csv_header());
  for (const auto& r : records)
    std::fprintf(fp, "%.17g,%.17g,%s,%.17g,%.17g,%s,%.17g\n", r.eps, r.p,
                 to_string(r.solver).c_str(), r.h, r.t_blowup,
                 r.status.c_str(), r.walltime);
  std::fclose(fp);
}

inline nlohmann::json fit_to_json(const ScalingFit& fit) {
  nlohmann::json j;
  j["model"] = to_string(fit.model);
  j["exponent"] = fit.exponent;
  j["stderr"] = fit.stderr_;
  j["intercept"] = fit.intercept;
  j["theory_exponent"] = std::isnan(fit.theory_exponent)
                             ? nlohmann::json()
                             : nlohmann::json(fit.theory_exponent);
  j["rel_deviation"] = std::isnan(fit.rel_deviation)
                           ? nlohmann::json()
                           : nlohmann::json(fit.rel_deviation);
  j["spread"] =
      std::isnan(fit.spread) ? nlohmann::json() : nlohmann::json(fit.spread);
  j["n_points"] = fit.n_points;
  j["p"] = fit.p;
  return j;
}

inline nlohmann::json comparison_to_json(const TheoryComparison& cmp) {
  nlohmann::json j;
  j["model"] = to_string(cmp.model);
  j["measured"] = cmp.measured;
  j["predicted"] = cmp.predicted;
  j["rel_deviation"] = cmp.rel_deviation;
  j["tolerance"] = cmp.tolerance;
  j["pass"] = cmp.pass;
  j["heat_exponent"] = cmp.heat_exponent;
  j["outlives_heat"] = cmp.outlives_heat;
  return j;
}

struct EmitPaths {
  std::string records_csv;
  std::string fits_json;
  std::string plot_script;
};

/// Writes records.csv, fits.json and plot.gp into out_dir (created if
/// missing).  The plot script references only the emitted csv.
inline EmitPaths emit_outputs(const std::string& out_dir,
                              const std::vector<LifespanRecord>& records,
                              const std::vector<ScalingFit>& fits,
                              const ExperimentConfig& ec,
                              const TheoryComparison* cmp = nullptr) {
  std::error_code dir_ec;
  std::filesystem::create_directories(out_dir, dir_ec);
  if (dir_ec) throw IoError("cannot create output directory", out_dir);

  EmitPaths paths;
  paths.records_csv = out_dir + "/records.csv";
  paths.fits_json = out_dir + "/fits.json";
  paths.plot_script = out_dir + "/plot.gp";

  write_records_csv(paths.records_csv, records);

  nlohmann::json root;
  root["fits"] = nlohmann::json::array();
  for (const auto& f : fits) root["fits"].push_back(fit_to_json(f));
  if (cmp) root["comparison"] = comparison_to_json(*cmp);
  nlohmann::json cfg_echo;
  const Config cfg = ec.to_config();
  for (const auto& [key, val] : cfg.items()) cfg_echo[key] = val;
  root["config"] = cfg_echo;
  {
    std::FILE* fp = std::fopen(paths.fits_json.c_str(), "w");
    if (!fp) throw IoError("cannot open for writing", paths.fits_json);
    const std::string text = root.dump(2);
    std::fwrite(text.data(), 1, text.size(), fp);
    std::fputc('\n', fp);
    std::fclose(fp);
  }

  {
    std::FILE* fp = std::fopen(paths.plot_script.c_str(), "w");
    if (!fp) throw IoError("cannot open for writing", paths.plot_script);
    std::fprintf(fp, "# lifespan curves; run from this directory\n");
    std::fprintf(fp, "set datafile separator \",\"\n");
    std::fprintf(fp, "set logscale xy\n");
    std::fprintf(fp, "set xlabel \"1 / eps\"\n");
    std::fprintf(fp, "set ylabel \"blow-up time\"\n");
    std::fprintf(fp, "set key left top\n");
    const ScalingFit* overlay = nullptr;
    for (const auto& f : fits)
      if (f.model != FitModel::b_eps) overlay = &f;
    if (overlay) {
      std::fprintf(fp, "A = %.17g\n", overlay->exponent);
      std::fprintf(fp, "B = %.17g\n", overlay->intercept);
      if (!std::isnan(overlay->theory_exponent))
        std::fprintf(fp, "T = %.17g\n", overlay->theory_exponent);
      const bool pw = overlay->model == FitModel::power;
      const std::string fitted =
          pw ? "exp(B) * x**A" : "exp(exp(B) * x**A)";
      const std::string predicted =
          pw ? "exp(B) * x**T" : "exp(exp(B) * x**T)";
      std::fprintf(fp,
                   "plot \"records.csv\" using (1.0/column(1)):(column(5) > 0 "
                   "? column(5) : 1/0) with points pt 7 title \"measured\"");
      std::fprintf(fp, ", \\\n     %s with lines dashtype 2 title \"fitted\"",
                   fitted.c_str());
      if (!std::isnan(overlay->theory_exponent))
        std::fprintf(fp,
                     ", \\\n     %s with lines dashtype 3 title \"predicted\"",
                     predicted.c_str());
      std::fprintf(fp, "\n");
    } else {
      std::fprintf(fp,
                   "plot \"records.csv\" using (1.0/column(1)):(column(5) > 0 "
                   "? column(5) : 1/0) with points pt 7 title \"measured\"\n");
    }
    std::fclose(fp);
  }
  return paths;
}

inline std::vector<LifespanRecord> read_records_csv(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open", path);
  std::vector<LifespanRecord> out;
  char line[512];
  if (!std::fgets(line, sizeof line, fp)) {
    std::fclose(fp);
    throw IoError("empty records file", path);
  }
  std::string header(line);
  while (!header.empty() && (header.back() == '\n' || header.back() == '\r'))
    header.pop_back();
  if (header != records_csv_header()) {
    std::fclose(fp);
    throw IoError("unexpected records header", path);
  }
  int lineno = 1;
  while (std::fgets(line, sizeof line, fp)) {
    ++lineno;
    std::string s(line);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    if (s.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
      if (i == s.size() || s[i] == ',') {
        cells.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    if (cells.size() != 7) {
      std::fclose(fp);
      throw IoError("bad row at line " + std::to_string(lineno), path);
    }
    try {
      LifespanRecord r;
      r.eps = std::stod(cells[0]);
      r.p = std::stod(cells[1]);
      r.solver = solver_from_string(cells[2]);
      r.h = std::stod(cells[3]);
      r.t_blowup = std::stod(cells[4]);
      r.status = cells[5];
      r.walltime = std::stod(cells[6]);
      out.push_back(r);
    } catch (const std::exception&) {
      std::fclose(fp);
      throw IoError("bad row at line " + std::to_string(lineno), path);
    }
  }
  std::fclose(fp);
  return out;
}

}  // namespace dwlab
