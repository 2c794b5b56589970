#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwlab/harness.hpp"

using namespace dwlab;

namespace {

LifespanRecord make_rec(double eps, double p, double T,
                        SolverKind solver = SolverKind::ode,
                        double h = 1e-10,
                        const std::string& status = "confirmed") {
  LifespanRecord r;
  r.eps = eps;
  r.p = p;
  r.solver = solver;
  r.h = h;
  r.t_blowup = T;
  r.status = status;
  r.walltime = 0.01;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parser round trips typed values", "[harness][config]") {
  const auto cfg = Config::parse_string(
      "# experiment\n"
      "p = 2.5\n"
      "eps = [1.0, 0.5, 0.25]\n"
      "solver = diamond\n"
      "flag = true\n"
      "n = 64\n");
  REQUIRE(cfg.get_double("p") == 2.5);
  REQUIRE(cfg.get_list("eps") == std::vector<double>{1.0, 0.5, 0.25});
  REQUIRE(cfg.get_str("solver") == "diamond");
  REQUIRE(cfg.get_bool("flag"));
  REQUIRE(cfg.get_int("n") == 64);
  REQUIRE(cfg.get_double("missing", 7.0) == 7.0);
  REQUIRE_FALSE(cfg.has("missing"));

  REQUIRE_THROWS_AS(Config::parse_string("just a line\n"), ConfigError);
  REQUIRE_THROWS_AS(Config::parse_string("key =\n"), ConfigError);
  REQUIRE_THROWS_AS(Config::parse_string("bad key = 1\n"), ConfigError);
  try {
    Config::parse_string("ok = 1\nbroken line\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.line() == 2);
  }
  REQUIRE_THROWS_AS(cfg.get_double("solver"), ConfigError);
  REQUIRE_THROWS_AS(cfg.get_int("p"), ConfigError);
  REQUIRE_THROWS_AS(cfg.get_bool("n"), ConfigError);
  REQUIRE_THROWS_AS(cfg.get_list("p"), ConfigError);
  REQUIRE_THROWS_AS(cfg.get_str("nope"), ConfigError);

  // serialization is key-sorted, so input order cannot leak through
  const auto a = Config::parse_string("b = 2\na = 1\n");
  const auto b = Config::parse_string("a = 1\nb = 2\n");
  REQUIRE(a.serialize() == b.serialize());
  REQUIRE(a.serialize() == "a = 1\nb = 2\n");

  REQUIRE_THROWS_AS(Config::parse_file("no_such_config.cfg"), IoError);
}

TEST_CASE("experiment config canonicalizes and validates", "[harness]") {
  const auto cfg = Config::parse_string(
      "p = 2.0\n"
      "eps = [0.5, 1.0, 0.7]\n"
      "resolutions = [128, 64]\n"
      "solver = ode\n"
      "bump = cosine\n"
      "mode = thm22\n");
  const auto ec = ExperimentConfig::from_config(cfg);
  REQUIRE(ec.eps_list == std::vector<double>{1.0, 0.7, 0.5});
  REQUIRE(ec.resolutions == std::vector<int>{64, 128});
  REQUIRE(ec.solver == SolverKind::ode);
  REQUIRE(ec.bump == BumpKind::cosine_bump);

  // round trip through the flat format preserves every field
  const auto ec2 = ExperimentConfig::from_config(
      Config::parse_string(ec.to_config().serialize()));
  REQUIRE(ec2.eps_list == ec.eps_list);
  REQUIRE(ec2.resolutions == ec.resolutions);
  REQUIRE(ec2.p == ec.p);
  REQUIRE(ec2.solver == ec.solver);
  REQUIRE(ec2.t_max == ec.t_max);
  REQUIRE(ec2.seed == ec.seed);

  auto bad = [](const std::string& text) {
    REQUIRE_THROWS_AS(
        ExperimentConfig::from_config(Config::parse_string(text)),
        std::invalid_argument);
  };
  bad("resolutions = [48]\n");
  bad("cfl = 0.95\n");
  bad("p = 0.5\n");
  bad("eps = [1.0, 1.0]\n");
  bad("solver = magic\n");
  bad("ode_rtol = 0.5\n");
}

TEST_CASE("ode sweep yields sorted confirmed records", "[harness]") {
  ExperimentConfig ec;
  ec.p = 2.5;
  ec.solver = SolverKind::ode;
  ec.eps_list = {0.5, 0.35, 0.25, 0.18};

  const auto recs = run_sweep(ec, false);
  REQUIRE(recs.size() == 4);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    REQUIRE(recs[i].eps == ec.eps_list[i]);
    REQUIRE(recs[i].status == "confirmed");
    REQUIRE(recs[i].h == ec.ode_rtol);
    REQUIRE(recs[i].t_blowup > 0.0);
    REQUIRE(recs[i].walltime >= 0.0);
  }
  // smaller amplitude lives longer
  for (std::size_t i = 1; i < recs.size(); ++i)
    REQUIRE(recs[i].t_blowup > recs[i - 1].t_blowup);

  // parallel execution is invisible in the output
  const auto par = run_sweep(ec, true);
  REQUIRE(par.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    REQUIRE(par[i].eps == recs[i].eps);
    REQUIRE(par[i].t_blowup == recs[i].t_blowup);
    REQUIRE(par[i].status == recs[i].status);
    REQUIRE(par[i].h == recs[i].h);
  }

  ExperimentConfig empty = ec;
  empty.eps_list.clear();
  REQUIRE(run_sweep(empty).empty());
}

TEST_CASE("diamond sweep confirms blow-up across resolutions", "[harness]") {
  ExperimentConfig ec;
  ec.p = 2.0;
  ec.solver = SolverKind::diamond;
  ec.eps_list = {1.0, 0.7};
  ec.resolutions = {32, 64};
  ec.t_max = 40.0;
  ec.blowup_threshold = 1e6;

  const auto recs = run_sweep(ec);
  REQUIRE(recs.size() == 4);
  // sorted by (eps desc, h asc): finest resolution first within each eps
  REQUIRE(recs[0].eps == 1.0);
  REQUIRE(recs[0].h == Catch::Approx(2.0 / 64));
  REQUIRE(recs[1].eps == 1.0);
  REQUIRE(recs[1].h == Catch::Approx(2.0 / 32));
  REQUIRE(recs[2].eps == 0.7);
  REQUIRE(recs[3].eps == 0.7);

  for (const auto& r : recs) {
    REQUIRE(r.t_blowup > 0.0);
    REQUIRE(r.status == "confirmed");
  }
  // lifespan is monotone in eps at fixed h
  REQUIRE(recs[2].t_blowup > recs[0].t_blowup);
  REQUIRE(recs[3].t_blowup > recs[1].t_blowup);
}

TEST_CASE("fit recovers synthetic generating laws", "[harness]") {
  // power law T = eps^(-3/7)
  std::vector<LifespanRecord> pow_recs;
  for (double eps : {1e-1, 4.6e-2, 2.2e-2, 1e-2, 4.6e-3, 1e-3})
    pow_recs.push_back(make_rec(eps, 1.5, std::pow(eps, -3.0 / 7.0)));
  const auto pf = fit_exponent(pow_recs, FitModel::power);
  REQUIRE(pf.exponent == Catch::Approx(3.0 / 7.0).epsilon(1e-10));
  REQUIRE(pf.stderr_ < 1e-6);
  REQUIRE(pf.theory_exponent == Catch::Approx(3.0 / 7.0));
  REQUIRE(pf.rel_deviation < 1e-10);
  REQUIRE(pf.n_points == 6);

  // coarse duplicates are ignored in favor of the finest row per eps
  auto noisy = pow_recs;
  for (auto r : pow_recs) {
    r.h = 1e-8;  // coarser knob
    r.t_blowup *= 2.0;
    noisy.push_back(r);
  }
  const auto pf2 = fit_exponent(noisy, FitModel::power);
  REQUIRE(pf2.exponent == Catch::Approx(pf.exponent).epsilon(1e-12));

  // linear-in-b law T = 5 b(eps)
  std::vector<LifespanRecord> b_recs;
  for (double eps : {1.0, 0.7, 0.5, 0.35, 0.25})
    b_recs.push_back(make_rec(eps, 2.0, 5.0 * solve_b(eps)));
  const auto bf = fit_exponent(b_recs, FitModel::b_eps);
  REQUIRE(bf.exponent == Catch::Approx(5.0).epsilon(1e-6));
  REQUIRE(bf.spread == Catch::Approx(1.0).epsilon(1e-9));
  REQUIRE(std::isnan(bf.theory_exponent));
  REQUIRE(b_eps_ratio_spread(b_recs) == Catch::Approx(1.0).epsilon(1e-9));

  // exponential law T = exp(2 eps^-6)
  std::vector<LifespanRecord> exp_recs;
  for (double eps : {1.0, 0.9, 0.8, 0.7, 0.6})
    exp_recs.push_back(
        make_rec(eps, 3.0, std::exp(2.0 * std::pow(eps, -6.0))));
  const auto ef = fit_exponent(exp_recs, FitModel::exponential);
  REQUIRE(ef.exponent == Catch::Approx(6.0).epsilon(1e-6));
  REQUIRE(ef.theory_exponent == Catch::Approx(6.0));
  REQUIRE(ef.rel_deviation < 1e-6);

  // guard rails
  std::vector<LifespanRecord> few(pow_recs.begin(), pow_recs.begin() + 3);
  REQUIRE_THROWS_AS(fit_exponent(few, FitModel::power), NumericalError);
  auto mixed = pow_recs;
  mixed[0].p = 2.5;
  REQUIRE_THROWS_AS(fit_exponent(mixed, FitModel::power),
                    std::invalid_argument);
  auto unconfirmed = pow_recs;
  for (auto& r : unconfirmed) r.status = "unconfirmed";
  REQUIRE_THROWS_AS(fit_exponent(unconfirmed, FitModel::power),
                    NumericalError);
  auto pde_exp = exp_recs;
  for (auto& r : pde_exp) r.solver = SolverKind::diamond;
  REQUIRE_THROWS_AS(fit_exponent(pde_exp, FitModel::exponential),
                    std::invalid_argument);
}

TEST_CASE("theory comparison verdicts", "[harness]") {
  std::vector<LifespanRecord> pow_recs;
  for (double eps : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3})
    pow_recs.push_back(make_rec(eps, 1.5, std::pow(eps, -3.0 / 7.0)));
  const auto pf = fit_exponent(pow_recs, FitModel::power);
  const auto cmp = compare_with_theory(pf, 0.10);
  REQUIRE(cmp.pass);
  REQUIRE(cmp.predicted == Catch::Approx(3.0 / 7.0));
  REQUIRE(cmp.heat_exponent == Catch::Approx(1.0 / 3.0));
  REQUIRE(cmp.outlives_heat);  // 3/7 > 1/3: longer life than diffusion predicts

  std::vector<LifespanRecord> exp_recs;
  for (double eps : {1.0, 0.9, 0.8, 0.7, 0.6})
    exp_recs.push_back(
        make_rec(eps, 3.0, std::exp(2.0 * std::pow(eps, -6.0))));
  const auto ef = fit_exponent(exp_recs, FitModel::exponential);
  const auto ecmp = compare_with_theory(ef, 0.15);
  REQUIRE(ecmp.pass);
  REQUIRE(ecmp.heat_exponent == Catch::Approx(2.0));
  REQUIRE(ecmp.outlives_heat);

  std::vector<LifespanRecord> b_recs;
  for (double eps : {1.0, 0.7, 0.5, 0.35})
    b_recs.push_back(make_rec(eps, 2.0, 5.0 * solve_b(eps)));
  const auto bf = fit_exponent(b_recs, FitModel::b_eps);
  REQUIRE_THROWS_AS(compare_with_theory(bf), std::invalid_argument);

  // power model on p = 2 records has no matching predicted form
  std::vector<LifespanRecord> p2_recs;
  for (double eps : {1.0, 0.7, 0.5, 0.35})
    p2_recs.push_back(make_rec(eps, 2.0, 5.0 * solve_b(eps)));
  const auto wrong = fit_exponent(p2_recs, FitModel::power);
  REQUIRE(std::isnan(wrong.theory_exponent));
  REQUIRE_THROWS_AS(compare_with_theory(wrong), std::invalid_argument);
}

TEST_CASE("records persist byte-faithfully", "[harness]") {
  std::vector<LifespanRecord> recs;
  recs.push_back(make_rec(0.5, 2.5, 123.45678901234567));
  recs.push_back(make_rec(0.25, 2.5, 9876.5432109876543));
  recs.push_back(make_rec(0.1, 2.5, -1.0, SolverKind::diamond, 0.03125,
                          "unresolved"));

  const std::string dir = "harness_io_test";
  std::filesystem::create_directories(dir);
  const std::string csv = dir + "/records.csv";
  write_records_csv(csv, recs);

  const std::string text = slurp(csv);
  REQUIRE(text.rfind("eps,p,solver,h,t_blowup,status,walltime\n", 0) == 0);

  const auto back = read_records_csv(csv);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    REQUIRE(back[i].eps == recs[i].eps);
    REQUIRE(back[i].p == recs[i].p);
    REQUIRE(back[i].solver == recs[i].solver);
    REQUIRE(back[i].h == recs[i].h);
    REQUIRE(back[i].t_blowup == recs[i].t_blowup);
    REQUIRE(back[i].status == recs[i].status);
    REQUIRE(back[i].walltime == recs[i].walltime);
  }

  REQUIRE_THROWS_AS(read_records_csv(dir + "/nope.csv"), IoError);
  {
    std::ofstream bad(dir + "/bad.csv");
    bad << "eps,p,oops\n";
  }
  REQUIRE_THROWS_AS(read_records_csv(dir + "/bad.csv"), IoError);
  {
    std::ofstream bad(dir + "/badrow.csv");
    bad << records_csv_header() << "\n1.0,2.0,diamond,0.1\n";
  }
  REQUIRE_THROWS_AS(read_records_csv(dir + "/badrow.csv"), IoError);

  std::filesystem::remove_all(dir);
}

TEST_CASE("emitted outputs are self-contained", "[harness]") {
  std::vector<LifespanRecord> recs;
  for (double eps : {1e-1, 3e-2, 1e-2, 3e-3})
    recs.push_back(make_rec(eps, 1.5, std::pow(eps, -3.0 / 7.0)));
  const auto fit = fit_exponent(recs, FitModel::power);
  const auto cmp = compare_with_theory(fit);

  ExperimentConfig ec;
  ec.p = 1.5;
  ec.solver = SolverKind::ode;
  ec.eps_list = {1e-1, 3e-2, 1e-2, 3e-3};

  const std::string dir = "harness_emit_test";
  const auto paths = emit_outputs(dir, recs, {fit}, ec, &cmp);
  REQUIRE(std::filesystem::exists(paths.records_csv));
  REQUIRE(std::filesystem::exists(paths.fits_json));
  REQUIRE(std::filesystem::exists(paths.plot_script));

  const auto root = nlohmann::json::parse(slurp(paths.fits_json));
  REQUIRE(root["fits"].size() == 1);
  REQUIRE(root["fits"][0]["model"] == "power");
  REQUIRE(std::fabs(root["fits"][0]["exponent"].get<double>() - 3.0 / 7.0) <
          1e-9);
  REQUIRE(root["comparison"]["pass"].get<bool>());
  REQUIRE(root["config"]["solver"] == "ode");

  const std::string plot = slurp(paths.plot_script);
  REQUIRE(plot.find("records.csv") != std::string::npos);
  REQUIRE(plot.find('/') != 0);                        // no absolute paths
  REQUIRE(plot.find(dir) == std::string::npos);        // no directory leakage
  REQUIRE(plot.find("datafile separator") != std::string::npos);

  std::filesystem::remove_all(dir);
}
