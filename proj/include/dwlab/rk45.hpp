#pragma once

// Embedded Cash-Karp 5(4) step with proportional step control.  Small and
// header-only on purpose: the blow-up drivers need custom stopping logic,
// so they own the loop and call the step primitive.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "dwlab/numerics.hpp"

namespace dwlab {

template <std::size_t N>
using OdeState = std::array<double, N>;

/// One trial step.  Writes the 5th-order solution into y5 and returns the
/// scaled error norm (<= 1 means acceptable at the given tolerances).
template <std::size_t N, class Rhs>
double rk45_step(Rhs&& rhs, double t, const OdeState<N>& y, double dt,
                 OdeState<N>& y5, double rtol, double atol) {
  constexpr double a21 = 1.0 / 5.0;
  constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  constexpr double a41 = 3.0 / 10.0, a42 = -9.0 / 10.0, a43 = 6.0 / 5.0;
  constexpr double a51 = -11.0 / 54.0, a52 = 5.0 / 2.0, a53 = -70.0 / 27.0,
                   a54 = 35.0 / 27.0;
  constexpr double a61 = 1631.0 / 55296.0, a62 = 175.0 / 512.0,
                   a63 = 575.0 / 13824.0, a64 = 44275.0 / 110592.0,
                   a65 = 253.0 / 4096.0;
  constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 3.0 / 5.0, c5 = 1.0,
                   c6 = 7.0 / 8.0;
  constexpr double b1 = 37.0 / 378.0, b3 = 250.0 / 621.0, b4 = 125.0 / 594.0,
                   b6 = 512.0 / 1771.0;
  constexpr double d1 = 2825.0 / 27648.0, d3 = 18575.0 / 48384.0,
                   d4 = 13525.0 / 55296.0, d5 = 277.0 / 14336.0, d6 = 0.25;

  OdeState<N> k1, k2, k3, k4, k5, k6, tmp;
  rhs(t, y, k1);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + dt * a21 * k1[i];
  rhs(t + c2 * dt, tmp, k2);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + dt * (a31 * k1[i] + a32 * k2[i]);
  rhs(t + c3 * dt, tmp, k3);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + dt * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  rhs(t + c4 * dt, tmp, k4);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] =
        y[i] + dt * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  rhs(t + c5 * dt, tmp, k5);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + dt * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                          a64 * k4[i] + a65 * k5[i]);
  rhs(t + c6 * dt, tmp, k6);

  double err_norm = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double hi =
        y[i] + dt * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b6 * k6[i]);
    const double lo = y[i] + dt * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] +
                                   d5 * k5[i] + d6 * k6[i]);
    y5[i] = hi;
    const double scale =
        atol + rtol * std::max(std::fabs(y[i]), std::fabs(hi));
    const double e = std::fabs(hi - lo) / scale;
    if (!(e <= err_norm)) err_norm = e;  // NaN propagates to a reject
  }
  return err_norm;
}

/// Step-size factor from the scaled error norm, clamped to [0.2, 5].
inline double rk45_factor(double err_norm) {
  if (!std::isfinite(err_norm)) return 0.2;  // NaN or inf: shrink
  if (err_norm <= 0.0) return 5.0;
  return std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
}

template <std::size_t N>
struct OdeRunStats {
  OdeState<N> y{};
  double t = 0.0;
  long accepted = 0;
  long rejected = 0;
  bool reached = false;
};

/// Integrate a smooth segment to t_end exactly.  Throws NumericalError if
/// the step count budget runs out or the state turns non-finite.
template <std::size_t N, class Rhs>
OdeRunStats<N> rk45_integrate(Rhs&& rhs, OdeState<N> y, double t, double t_end,
                              double rtol = 1e-10, double atol = 1e-30,
                              double dt_init = 0.0, long max_steps = 2000000) {
  OdeRunStats<N> st;
  double dt = dt_init > 0.0 ? dt_init : std::max(1e-6, 1e-6 * std::fabs(t_end - t));
  while (t < t_end) {
    if (st.accepted + st.rejected >= max_steps)
      throw NumericalError("rk45_integrate: step budget exhausted");
    dt = std::min(dt, t_end - t);
    OdeState<N> ynew;
    const double err = rk45_step(rhs, t, y, dt, ynew, rtol, atol);
    if (err <= 1.0) {
      t += dt;
      y = ynew;
      ++st.accepted;
      for (double v : y)
        if (!std::isfinite(v))
          throw NumericalError("rk45_integrate: state is not finite");
    } else {
      ++st.rejected;
    }
    dt *= rk45_factor(err);
    if (!(dt > 0.0)) throw NumericalError("rk45_integrate: step underflow");
  }
  st.y = y;
  st.t = t;
  st.reached = true;
  return st;
}

}  // namespace dwlab
