// Command line front end: solve / sweep / fit / verify / predict.
//
// Exit codes: 0 success, 1 usage or malformed input, 2 numerical failure,
// 3 file I/O failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <dwlab/config.hpp>
#include <dwlab/duhamel.hpp>
#include <dwlab/fd.hpp>
#include <dwlab/functional.hpp>
#include <dwlab/grid.hpp>
#include <dwlab/harness.hpp>
#include <dwlab/initial_data.hpp>
#include <dwlab/numerics.hpp>
#include <dwlab/scaling.hpp>

namespace {

using namespace dwlab;

// Recording a field costs nt * nx doubles; refuse silly allocations.
constexpr std::size_t max_field_nodes = 25'000'000;

ExperimentConfig load_experiment(const std::string& config_path,
                                 const std::string& solver_override) {
  ExperimentConfig ec;
  if (!config_path.empty())
    ec = ExperimentConfig::from_config(Config::parse_file(config_path));
  if (!solver_override.empty())
    ec.solver = solver_from_string(solver_override);
  ec.validate();
  return ec;
}

void make_out_dir(const std::string& dir) {
  std::error_code fs_ec;
  std::filesystem::create_directories(dir, fs_ec);
  if (fs_ec) throw IoError("cannot create output directory", dir);
}

const char* regime_text(PRegime r) {
  switch (r) {
    case PRegime::subcritical_low: return "1 < p < 2";
    case PRegime::p_equal_2: return "p = 2";
    case PRegime::subcritical_high: return "2 < p < 3";
    case PRegime::critical: return "p = 3";
  }
  return "?";
}

FitModel default_model(double p) {
  switch (regime_of(p)) {
    case PRegime::p_equal_2: return FitModel::b_eps;
    case PRegime::critical: return FitModel::exponential;
    default: return FitModel::power;
  }
}

void print_fit(const ScalingFit& fit) {
  std::printf("fit: model = %s, %zu points at p = %g\n",
              to_string(fit.model).c_str(), fit.n_points, fit.p);
  if (fit.model == FitModel::b_eps) {
    std::printf("  T / b(eps) slope = %.6g +- %.2g, ratio spread = %.4g\n",
                fit.exponent, fit.stderr_, fit.spread);
  } else {
    const char* what =
        fit.model == FitModel::power ? "exponent" : "rate exponent";
    std::printf("  %s = %.6g +- %.2g\n", what, fit.exponent, fit.stderr_);
  }
}

void print_comparison(const TheoryComparison& cmp) {
  std::printf(
      "theory: predicted %.6g, measured %.6g, deviation %.2f%% -> %s "
      "(tolerance %.0f%%)\n",
      cmp.predicted, cmp.measured, 100.0 * cmp.rel_deviation,
      cmp.pass ? "PASS" : "FAIL", 100.0 * cmp.tolerance);
  std::printf("  reference exponent %.6g; longer-lived than that scaling: %s\n",
              cmp.heat_exponent, cmp.outlives_heat ? "yes" : "no");
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const std::string& config_path, const std::string& solver_flag,
              const std::string& out_dir, int resolution_flag) {
  ExperimentConfig ec = load_experiment(config_path, solver_flag);
  const double eps = ec.eps_list.front();
  const int N = resolution_flag > 0 ? resolution_flag : ec.resolutions.back();
  const auto pr = make_bump_pair(ec.bump, ec.k, ec.mode, ec.amplitude);
  const auto pa = ec.problem(eps);

  std::printf("solve: solver = %s, p = %g, mu = %g, k = %g, eps = %g\n",
              to_string(ec.solver).c_str(), ec.p, ec.mu, ec.k, eps);

  if (ec.solver == SolverKind::ode) {
    OdeOptions opt;
    opt.rtol = ec.ode_rtol;
    opt.t_cap = ec.ode_t_cap;
    const auto res = ode_comparison_lifespan(pr, pa, opt);
    std::printf("status = %s\n", to_string(res.status));
    if (res.status == SolveStatus::blew_up)
      std::printf("t_blowup = %.12g\n", res.t_blowup);
    std::printf("final state: t = %.6g, F = %.6g, dF/dt = %.6g\n", res.final_t,
                res.final_F, res.final_dF);
    std::printf("steps: %ld accepted, %ld rejected (rtol %g)\n", res.accepted,
                res.rejected, opt.rtol);
    return 0;
  }

  make_out_dir(out_dir);
  const std::string field_csv = out_dir + "/field.csv";
  const std::string trace_csv = out_dir + "/trace.csv";

  SolveStatus status;
  double t_blowup = -1.0;
  FunctionalTrace tr;
  bool have_trace = false;

  if (ec.solver == SolverKind::diamond) {
    const auto g = CharacteristicGrid::make(ec.k, N, ec.t_max);
    if (static_cast<std::size_t>(g.nt) * g.nx > max_field_nodes)
      throw std::invalid_argument(
          "solve: recorded field too large; reduce t_max or --resolution");
    MarchOptions opt;
    opt.blowup_threshold = ec.blowup_threshold;
    const auto res = diamond_march(pr, pa, g, opt);
    status = res.status;
    t_blowup = res.t_blowup;
    write_field_csv(*res.field, field_csv);
    write_field_binary(*res.field, out_dir + "/field.bin");
    std::printf("wrote %s, %s/field.bin\n", field_csv.c_str(), out_dir.c_str());
    if (res.times.size() >= 4) {
      tr = trace_from_march(res, pa);
      have_trace = true;
    }
  } else {
    const auto g = UniformGrid::make(ec.k, N, ec.t_max, ec.cfl);
    if (static_cast<std::size_t>(g.nsteps + 1) * g.nx > max_field_nodes)
      throw std::invalid_argument(
          "solve: recorded field too large; reduce t_max or --resolution");
    FDOptions opt;
    opt.blowup_threshold = ec.blowup_threshold;
    opt.record_levels = true;
    const auto res = solve_ivp2(pr, pa, g, opt);
    status = res.status;
    t_blowup = res.t_blowup;

    std::FILE* fp = std::fopen(field_csv.c_str(), "w");
    if (!fp) throw IoError("cannot open for writing", field_csv);
    std::fprintf(fp, "x,t,value\n");
    for (std::size_t r = 0; r < res.times.size(); ++r)
      for (int i = 0; i < g.nx; ++i)
        std::fprintf(fp, "%.17g,%.17g,%.17g\n", g.x(i), res.times[r],
                     res.levels[r][i]);
    if (std::fclose(fp) != 0) throw IoError("write failed", field_csv);
    std::printf("wrote %s\n", field_csv.c_str());

    if (res.times.size() >= 4) {
      std::vector<double> int_u(res.times.size()), int_p(res.times.size());
      for (std::size_t r = 0; r < res.times.size(); ++r) {
        double su = 0.0, sp = 0.0;
        for (int i = 0; i < g.nx; ++i) {
          su += res.levels[r][i];
          sp += pow_abs(res.levels[r][i], pa.p);
        }
        int_u[r] = g.dx * su;
        int_p[r] = g.dx * sp;
      }
      tr = trace_from_rows(res.times, int_u, int_p, pa, status, t_blowup);
      have_trace = true;
    }
  }

  if (have_trace) {
    write_trace_csv(trace_csv, tr);
    std::printf("wrote %s\n", trace_csv.c_str());
  } else {
    std::printf("trace skipped: fewer than 4 recorded rows\n");
  }

  std::printf("status = %s\n", to_string(status));
  if (status == SolveStatus::blew_up)
    std::printf("t_blowup = %.12g (resolution %d, h = %.6g)\n", t_blowup, N,
                ec.k / N);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const std::string& config_path, const std::string& solver_flag,
              const std::string& out_dir, std::uint64_t seed, bool seed_given) {
  ExperimentConfig ec = load_experiment(config_path, solver_flag);
  if (seed_given) ec.seed = seed;

  if (std::fabs(ec.p - 3.0) <= regime_tol && ec.solver != SolverKind::ode) {
    std::fprintf(stderr,
                 "sweep: at p = 3 the blow-up time grows like exp(C / eps^6), "
                 "out of reach for any direct grid; rerun with --solver ode\n");
    return 1;
  }

  std::printf("sweep: solver = %s, p = %g, %zu amplitudes\n",
              to_string(ec.solver).c_str(), ec.p, ec.eps_list.size());
  const auto records = run_sweep(ec);

  std::size_t confirmed = 0, unresolved = 0;
  for (const auto& r : records) {
    if (r.status == "confirmed") ++confirmed;
    if (r.status == "unresolved") ++unresolved;
  }
  std::printf("%zu records: %zu confirmed blow-ups, %zu unresolved\n",
              records.size(), confirmed, unresolved);

  std::vector<ScalingFit> fits;
  TheoryComparison cmp;
  bool have_cmp = false;
  try {
    const FitModel model = default_model(ec.p);
    fits.push_back(fit_exponent(records, model));
    if (model != FitModel::b_eps) {
      cmp = compare_with_theory(fits.back());
      have_cmp = true;
    }
  } catch (const std::exception& e) {
    std::printf("fit skipped: %s\n", e.what());
  }

  const auto paths =
      emit_outputs(out_dir, records, fits, ec, have_cmp ? &cmp : nullptr);
  if (!fits.empty()) print_fit(fits.front());
  if (have_cmp) print_comparison(cmp);
  std::printf("wrote %s, %s, %s\n", paths.records_csv.c_str(),
              paths.fits_json.c_str(), paths.plot_script.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

int cmd_fit(const std::string& records_path, const std::string& model_flag,
            const std::string& out_dir, double tolerance) {
  const auto records = read_records_csv(records_path);
  if (records.empty()) throw NumericalError("fit: no records in " + records_path);

  FitModel model;
  if (!model_flag.empty()) {
    model = fit_model_from_string(model_flag);
  } else {
    try {
      model = default_model(records.front().p);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument(
          "fit: no default model for p = " +
          std::to_string(records.front().p) + "; pass --model");
    }
  }

  const auto fit = fit_exponent(records, model);
  print_fit(fit);

  nlohmann::json root;
  root["fits"] = nlohmann::json::array({fit_to_json(fit)});
  if (model != FitModel::b_eps && !std::isnan(fit.theory_exponent)) {
    const auto cmp = compare_with_theory(fit, tolerance);
    print_comparison(cmp);
    root["comparison"] = comparison_to_json(cmp);
  }

  make_out_dir(out_dir);
  const std::string path = out_dir + "/fits.json";
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw IoError("cannot open for writing", path);
  const std::string text = root.dump(2);
  std::fwrite(text.data(), 1, text.size(), fp);
  std::fputc('\n', fp);
  if (std::fclose(fp) != 0) throw IoError("write failed", path);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckTally {
  int failed = 0;
  void line(const char* name, bool ok) {
    std::printf("  %-44s %s\n", name, ok ? "PASS" : "FAIL");
    if (!ok) ++failed;
  }
};

int cmd_verify(const std::string& config_path, int resolution,
               std::uint64_t seed, std::size_t samples) {
  ExperimentConfig ec;
  if (!config_path.empty())
    ec = ExperimentConfig::from_config(Config::parse_file(config_path));
  ec.validate();
  const int N = resolution > 0 ? resolution : 64;
  CheckTally tally;

  std::printf("== weight interpolation inequality, randomized ==\n");
  const auto fuzz = interpolation_fuzz(samples, seed);
  std::printf("  %zu samples (seed %llu), %zu violations, worst margin %.3g\n",
              fuzz.samples, static_cast<unsigned long long>(seed),
              fuzz.violations, fuzz.worst_margin);
  tally.line("no violations", fuzz.violations == 0);

  std::printf("== slice cascade bookkeeping (p = 3) ==\n");
  {
    ProblemParams pa3;
    pa3.p = 3.0;
    pa3.k = ec.k;
    pa3.eps = ec.eps_list.front();
    const auto rep = slicing_cascade(pa3.eps, pa3, 40);
    bool closed_ok = true;
    for (int j = 0; j <= 20; ++j)
      closed_ok = closed_ok && rep.b_exact[j] == slicing_b_closed(j);
    tally.line("recursion matches closed form (j <= 20)", closed_ok);
    std::printf("  series sum %.15f (limit %.1f)\n", rep.S_partial, rep.S);
    tally.line("series within 1e-12 of its limit",
               std::fabs(rep.S_partial - rep.S) <= 1e-12);
    bool floor_ok = true;
    for (std::size_t j = 1; j < rep.log_D.size(); ++j)
      floor_ok = floor_ok && rep.log_D[j] >= rep.log_D_floor[j] - 1e-9;
    tally.line("log-domain floor holds (j <= 40)", floor_ok);
    std::printf("  divergence bound at eps = %g: log T <= %.6g\n", pa3.eps,
                rep.bound_log_t);
  }

  std::printf("== lower bound certificates ==\n");
  {
    const double eps_c =
        config_path.empty() ? 0.3 : ec.eps_list.back();
    const double t_c = std::min(ec.t_max, 8.0);
    std::printf("  march at p = %g, eps = %g, N = %d, t <= %g\n", ec.p, eps_c,
                N, t_c);
    const auto pr = make_bump_pair(ec.bump, ec.k, ec.mode, ec.amplitude);
    auto pa = ec.problem(eps_c);
    const auto g = CharacteristicGrid::make(ec.k, N, t_c);
    const auto res = diamond_march(pr, pa, g);
    const auto tr = trace_from_march(res, pa);

    const double defect = f_identity_error(tr);
    std::printf("  second derivative vs source: defect %.3g\n", defect);
    tally.line("integral identity within 1e-2", defect <= 1e-2);

    const auto hb = holder_lower_bound_check(tr, pa);
    std::printf("  convexity floor: worst ratio %.4g at t = %.3g (%zu rows)\n",
                hb.worst_ratio, hb.t_worst, hb.checked);
    tally.line("second derivative floor (2% slack)", hb.ok);

    if (pr.mode == DataMode::thm22) {
      const auto pb = pointwise_lower_bound_check(*res.field, pr, pa);
      std::printf("  light cone floor: worst ratio %.4g (%zu nodes)\n",
                  pb.worst_ratio, pb.checked);
      tally.line("pointwise floor (2% slack)", pb.ok);
    } else {
      std::printf("  light cone floor skipped: needs the one-signed data "
                  "profile\n");
    }
  }

  std::printf("== weighted envelope growth (lattice N = 8, T <= 256) ==\n");
  {
    const auto pr = make_bump_pair(ec.bump, ec.k, ec.mode, ec.amplitude);
    const auto pa = ec.problem(ec.eps_list.front());
    const std::vector<double> T_list = {32.0, 64.0, 128.0, 256.0};
    const AprioriLemma which[] = {AprioriLemma::linear_31,
                                  AprioriLemma::annulus_32,
                                  AprioriLemma::main_33,
                                  AprioriLemma::mixed_34};
    const char* names[] = {"linear_31", "annulus_32", "main_33", "mixed_34"};
    for (int i = 0; i < 4; ++i) {
      const auto rep = verify_apriori(which[i], pr, pa, T_list, 8);
      if (rep.skipped) {
        std::printf("  %-10s skipped: %s\n", names[i], rep.note.c_str());
        continue;
      }
      std::printf("  %-10s fitted growth %+.3f, expected %.3f%s (C = %.3g)\n",
                  names[i], rep.fitted_exponent, rep.expected_exponent,
                  rep.log_corrected ? " after log correction" : "",
                  rep.empirical_constant);
      bool ok;
      std::string label(names[i]);
      if (which[i] == AprioriLemma::main_33) {
        ok = std::fabs(rep.fitted_exponent - rep.expected_exponent) <=
             0.15 * rep.expected_exponent;
        label += ": growth rate within 15%";
      } else if (rep.bound_only) {
        ok = rep.fitted_exponent <= 0.10;
        label += ": envelope absorbs the growth";
      } else {
        ok = std::fabs(rep.fitted_exponent) <= 0.15;
        label += ": no growth";
      }
      tally.line(label.c_str(), ok);
    }
  }

  if (tally.failed == 0) {
    std::printf("verify: all checks passed\n");
    return 0;
  }
  std::printf("verify: %d check(s) failed\n", tally.failed);
  return 2;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

void print_prediction(const char* name, double eps, const ProblemParams& pa,
                      LifespanReference ref) {
  try {
    const auto pred = predicted_lifespan(eps, pa, ref);
    const double log10T = predicted_log_scale(pred, eps) / std::log(10.0);
    switch (pred.form) {
      case LifespanForm::power:
        std::printf("  %-22s T ~ eps^-%-10.6g log10 T ~ %.4g\n", name,
                    pred.exponent, log10T);
        break;
      case LifespanForm::b_eps:
        if (ref == LifespanReference::nondamped)
          std::printf("  %-22s T ~ a(eps) = %-10.6g log10 T ~ %.4g\n", name,
                      solve_a(eps), log10T);
        else
          std::printf("  %-22s T ~ b(eps) = %-10.6g log10 T ~ %.4g\n", name,
                      solve_b(eps), log10T);
        break;
      case LifespanForm::exponential:
        std::printf("  %-22s log T ~ eps^-%-6.6g log10 T ~ %.4g\n", name,
                    pred.exponent, log10T);
        break;
    }
  } catch (const std::exception& e) {
    std::printf("  %-22s not applicable: %s\n", name, e.what());
  }
}

int cmd_predict(const std::string& config_path, double p, double mu, int n,
                double eps) {
  if (!config_path.empty()) {
    const auto cfg = Config::parse_file(config_path);
    if (p <= 0.0) p = cfg.get_double("p", 2.0);
    if (mu < 0.0) mu = cfg.get_double("mu", 2.0);
    if (n <= 0) n = static_cast<int>(cfg.get_int("n", 1));
    if (eps <= 0.0 && cfg.has("eps")) eps = cfg.get_list("eps").front();
  }
  if (p <= 0.0) p = 2.0;
  if (mu < 0.0) mu = 2.0;
  if (n <= 0) n = 1;
  if (eps <= 0.0) eps = 0.1;

  ProblemParams pa;
  pa.p = p;
  pa.n = n;
  pa.mu = mu;
  pa.eps = eps;
  pa.validate();

  std::printf("parameters: p = %g, mu = %g, n = %d, eps = %g\n", p, mu, n, eps);
  try {
    std::printf("nonlinearity regime: %s\n", regime_text(regime_of(p)));
  } catch (const std::invalid_argument&) {
    std::printf("nonlinearity regime: outside (1, 3]\n");
  }
  const double m0 = mu_zero(n);
  std::printf("damping threshold mu0(%d) = %.6g: %s\n", n, m0,
              mu >= m0 ? "damping dominates (diffusive scaling)"
                       : "below threshold (hyperbolic scaling)");

  std::printf("lifespan magnitudes, constants set to 1:\n");
  print_prediction("damped 1d:", eps, pa, LifespanReference::new_1d);
  print_prediction("diffusive reference:", eps, pa, LifespanReference::heat);
  std::printf("  (shifted dimension n + mu = %g)\n", pa.n + pa.mu);
  print_prediction("shifted wave:", eps, pa, LifespanReference::wave);
  print_prediction("undamped reference:", eps, pa, LifespanReference::nondamped);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blow-up experiments for a damped semilinear wave equation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dwlab 0.1.0");

  std::string config_path, solver_flag, out_dir = "out", model_flag;
  std::string records_path;
  int resolution = 0;
  std::uint64_t seed = 1234;
  std::size_t samples = 100000;
  double tolerance = 0.10;
  double pred_p = -1.0, pred_mu = -1.0, pred_eps = -1.0;
  int pred_n = 0;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value experiment file")
        ->check(CLI::ExistingFile);
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--solver", solver_flag, "diamond, fd or ode")
        ->check(CLI::IsMember({"diamond", "fd", "ode"}));
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "one run; writes the field and its time trace");
  add_config(solve);
  add_solver(solve);
  solve->add_option("--out", out_dir, "output directory");
  solve->add_option("--resolution", resolution, "lattice cells per unit k");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "amplitude sweep; writes records.csv, fits.json, plot.gp");
  add_config(sweep);
  sweep->get_option("--config")->required();
  add_solver(sweep);
  sweep->add_option("--out", out_dir, "output directory");
  auto* seed_opt =
      sweep->add_option("--seed", seed, "seed recorded with the sweep");

  CLI::App* fit = app.add_subcommand(
      "fit", "regress blow-up times from a records.csv");
  fit->add_option("records", records_path, "records.csv from a sweep")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--model", model_flag, "power, b_eps or exponential")
      ->check(CLI::IsMember({"power", "b_eps", "exponential"}));
  fit->add_option("--out", out_dir, "output directory");
  fit->add_option("--tolerance", tolerance, "relative tolerance for the verdict");

  CLI::App* verify = app.add_subcommand(
      "verify", "certificate battery: inequalities, envelopes, cascade");
  add_config(verify);
  verify->add_option("--resolution", resolution, "march cells per unit k");
  verify->add_option("--seed", seed, "seed for the randomized inequality sweep");
  verify->add_option("--samples", samples, "randomized samples");

  CLI::App* predict = app.add_subcommand(
      "predict", "print the lifespan scaling tables for given p, mu, n");
  add_config(predict);
  predict->add_option("--p", pred_p, "nonlinearity exponent");
  predict->add_option("--mu", pred_mu, "damping coefficient");
  predict->add_option("--n", pred_n, "spatial dimension");
  predict->add_option("--eps", pred_eps, "data amplitude");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(solve))
      return cmd_solve(config_path, solver_flag, out_dir, resolution);
    if (app.got_subcommand(sweep))
      return cmd_sweep(config_path, solver_flag, out_dir, seed,
                       seed_opt->count() > 0);
    if (app.got_subcommand(fit))
      return cmd_fit(records_path, model_flag, out_dir, tolerance);
    if (app.got_subcommand(verify))
      return cmd_verify(config_path, resolution, seed, samples);
    if (app.got_subcommand(predict))
      return cmd_predict(config_path, pred_p, pred_mu, pred_n, pred_eps);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
