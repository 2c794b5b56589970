#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dwlab/initial_data.hpp"
#include "dwlab/numerics.hpp"

using namespace dwlab;

namespace {

double quad(const std::function<double(double)>& f, double a, double b) {
  return adaptive_simpson(f, a, b, 1e-13);
}

}  // namespace

TEST_CASE("bump moments and sup norms", "[initial_data]") {
  const auto poly = make_bump_pair(BumpKind::poly_bump, 2.0, DataMode::thm22);
  CHECK(poly.f_moment == Catch::Approx(32.0 / 35.0).epsilon(1e-14));
  CHECK(poly.f_sup == 1.0);
  CHECK(quad(poly.f, -1.0, 1.0) == Catch::Approx(32.0 / 35.0).epsilon(1e-10));

  const auto cosb = make_bump_pair(BumpKind::cosine_bump, 2.0, DataMode::thm22);
  CHECK(cosb.f_moment == Catch::Approx(0.75).epsilon(1e-14));
  CHECK(quad(cosb.f, -1.0, 1.0) == Catch::Approx(0.75).epsilon(1e-10));

  const auto amp = make_bump_pair(BumpKind::poly_bump, 2.0, DataMode::thm22, 2.5);
  CHECK(amp.f(0.0) == Catch::Approx(2.5));
  CHECK(amp.f_moment == Catch::Approx(2.5 * 32.0 / 35.0));

  // closed-form p-integrals of (1-x^2)^3: 2^(2m+1) (m!)^2 / (2m+1)! at p = m/3
  CHECK(poly.f_lp(1.0) == Catch::Approx(32.0 / 35.0).epsilon(1e-10));
  CHECK(poly.f_lp(2.0) == Catch::Approx(4246732800.0 / 6227020800.0).epsilon(1e-10));
  CHECK(poly.f_lp(3.0) == Catch::Approx(std::pow(2.0, 19) * 362880.0 * 362880.0 /
                                        121645100408832000.0)
                              .epsilon(1e-10));
}

TEST_CASE("pair moments vanish in the zero moment modes", "[initial_data]") {
  for (auto kind : {BumpKind::poly_bump, BumpKind::cosine_bump}) {
    for (auto mode : {DataMode::thm22, DataMode::zero_moment_general}) {
      const auto pr = make_bump_pair(kind, 2.0, mode);
      CHECK(pr.zero_moment);
      auto sum = [&pr](double x) { return pr.f(x) + pr.g(x); };
      CHECK(std::fabs(quad(sum, -1.0, 1.0)) < 1e-12);
      // the antiderivative agrees with quadrature and closes at +1
      CHECK(std::fabs(pr.fg_antiderivative(1.0)) < 1e-14);
      CHECK(std::fabs(pr.fg_antiderivative(5.0)) < 1e-14);
      for (double x : {-0.8, -0.3, 0.2, 0.9}) {
        CHECK(pr.fg_antiderivative(x) ==
              Catch::Approx(quad(sum, -1.0, x)).margin(1e-10));
      }
    }
  }
}

TEST_CASE("thm22 pins g to -f; the general mode does not", "[initial_data]") {
  const auto tied = make_bump_pair(BumpKind::poly_bump, 2.0, DataMode::thm22);
  for (double x = -1.2; x <= 1.2; x += 0.05)
    CHECK(tied.g(x) == Catch::Approx(-tied.f(x)).margin(1e-15));

  const auto loose =
      make_bump_pair(BumpKind::poly_bump, 2.0, DataMode::zero_moment_general);
  double max_dev = 0.0;
  for (double x = -1.0; x <= 1.0; x += 0.01)
    max_dev = std::max(max_dev, std::fabs(loose.g(x) + loose.f(x)));
  CHECK(max_dev > 0.1);
  CHECK(loose.fplusg_l1 == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("free mode keeps the full moment", "[initial_data]") {
  const auto fr = make_bump_pair(BumpKind::poly_bump, 2.0, DataMode::free_data);
  CHECK_FALSE(fr.zero_moment);
  CHECK(fr.fg_antiderivative(2.0) == Catch::Approx(32.0 / 35.0).epsilon(1e-14));
  CHECK(fr.fplusg_l1 == Catch::Approx(32.0 / 35.0).epsilon(1e-14));
  std::vector<double> xs{0.0}, ts{0.0};
  CHECK_THROWS_AS(check_support_u0(fr, xs, ts), std::invalid_argument);
}

TEST_CASE("data regularity at the support edge", "[initial_data]") {
  const auto pr =
      make_bump_pair(BumpKind::poly_bump, 2.0, DataMode::zero_moment_general);
  const double d = 1e-6;
  CHECK(pr.f(1.0) == 0.0);
  CHECK(pr.g(1.0) == 0.0);
  // one-sided difference quotients vanish with d: f is C^2, g is C^1
  CHECK(std::fabs(pr.f(1.0 - d) / d) < 1e-4);
  CHECK(std::fabs(pr.g(1.0 - d) / d) < 1e-4);
  CHECK(std::fabs(pr.f(-1.0 + d) / d) < 1e-4);
  CHECK(std::fabs(pr.g(-1.0 + d) / d) < 1e-4);
}

TEST_CASE("free evolution matches direct quadrature", "[initial_data]") {
  for (auto mode :
       {DataMode::thm22, DataMode::zero_moment_general, DataMode::free_data}) {
    const auto pr = make_bump_pair(BumpKind::cosine_bump, 2.0, mode);
    auto sum = [&pr](double y) { return pr.f(y) + pr.g(y); };
    for (auto [x, t] : {std::pair{0.3, 0.25}, {0.0, 1.7}, {-2.1, 3.0},
                        {4.0, 4.5}, {0.9, 0.0}}) {
      const double lo = std::max(x - t, -1.0);
      const double hi = std::min(x + t, 1.0);
      const double tail = hi > lo ? quad(sum, lo, hi) : 0.0;
      const double expect = 0.5 * (pr.f(x + t) + pr.f(x - t)) + 0.5 * tail;
      CHECK(dalembert_u0(pr, x, t) == Catch::Approx(expect).margin(1e-10));
    }
  }
}

TEST_CASE("free evolution satisfies the wave equation", "[initial_data]") {
  // C^3 profile so the centered second differences behave
  const auto pr =
      make_bump_pair(BumpKind::cosine_bump, 2.0, DataMode::zero_moment_general);
  const double h = 1e-3;
  for (auto [x, t] : {std::pair{0.3, 0.25}, {0.45, 1.3}, {-1.2, 0.6}}) {
    const double utt = (dalembert_u0(pr, x, t + h) - 2.0 * dalembert_u0(pr, x, t) +
                        dalembert_u0(pr, x, t - h)) /
                       (h * h);
    const double uxx = (dalembert_u0(pr, x + h, t) - 2.0 * dalembert_u0(pr, x, t) +
                        dalembert_u0(pr, x - h, t)) /
                       (h * h);
    CHECK(utt - uxx == Catch::Approx(0.0).margin(2e-4));
  }
  // initial slices reproduce the data; the velocity datum is f + g
  for (double x : {-0.7, 0.0, 0.4}) {
    CHECK(dalembert_u0(pr, x, 0.0) == Catch::Approx(pr.f(x)).margin(1e-14));
    const double ut =
        (dalembert_u0(pr, x, h) - dalembert_u0(pr, x, -h)) / (2.0 * h);
    CHECK(ut == Catch::Approx(pr.f(x) + pr.g(x)).margin(1e-5));
  }
}

TEST_CASE("free evolution lives on the annulus", "[initial_data]") {
  std::vector<double> xs, ts{0.0, 0.5, 1.0, 2.0, 5.0, 9.0};
  for (double x = -12.0; x <= 12.0; x += 0.25) xs.push_back(x);
  for (auto kind : {BumpKind::poly_bump, BumpKind::cosine_bump}) {
    for (auto mode : {DataMode::thm22, DataMode::zero_moment_general}) {
      const auto pr = make_bump_pair(kind, 2.0, mode);
      const auto rep = check_support_u0(pr, xs, ts);
      INFO("worst " << rep.worst_abs << " at x=" << rep.worst_x
                    << " t=" << rep.worst_t);
      CHECK(rep.ok);
      CHECK(rep.checked > 0);
    }
  }
  // and it is nontrivial inside
  const auto pr = make_bump_pair(BumpKind::poly_bump, 2.0, DataMode::thm22);
  CHECK(std::fabs(dalembert_u0(pr, 5.0, 5.0)) > 0.4);
}

TEST_CASE("damping transform round trip", "[initial_data]") {
  for (double v : {-0.3, 0.0, 1.7}) {
    for (double t : {0.0, 0.5, 12.0}) {
      for (double mu : {0.0, 2.0, 3.5}) {
        const double u = liouville_forward(v, t, mu);
        CHECK(liouville_backward(u, t, mu) == Catch::Approx(v).margin(1e-14));
      }
    }
  }
  CHECK(liouville_forward(1.5, 0.0, 2.0) == 1.5);
  CHECK(liouville_forward(1.5, 3.0, 2.0) == Catch::Approx(6.0));
}
