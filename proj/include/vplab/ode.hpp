#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "vplab/errors.hpp"

namespace vplab {

struct OdeStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) (Boost.Odeint controlled stepper, FSAL) from
/// t0 to exactly t1, in either direction. on_step(t, y, dydt) runs after every
/// accepted step, which is enough for Hermite dense output. The right-hand
/// side is f(y, dydt, t).
template <class F, class Observer>
OdeStats integrate_steps(F&& f, std::vector<double>& y, double t0, double t1, double atol, double rtol,
                         Observer&& on_step, std::size_t max_steps = 10'000'000) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  auto stepper = odeint::make_controlled(atol, rtol, odeint::runge_kutta_dopri5<State>());
  OdeStats st;
  State dydt(y.size());
  f(y, dydt, t0);
  double t = t0;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  double dt = dir * std::min(std::abs(t1 - t0), 1e-3 * std::max(1.0, std::abs(t1 - t0)));
  while (dir * (t1 - t) > 0.0) {
    if (st.steps + st.rejected >= max_steps) throw NumericalError("ode: step budget exhausted");
    const bool last = std::abs(dt) >= std::abs(t1 - t);
    double h = last ? t1 - t : dt;
    const double before = h;
    if (stepper.try_step(f, y, dydt, t, h) == odeint::success) {
      if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); }))
        throw NumericalError("ode: non-finite solution");
      if (last) t = t1;  // remove round-off in the final abscissa
      ++st.steps;
      on_step(t, static_cast<const State&>(y), static_cast<const State&>(dydt));
      // a step clipped to the target does not shrink the running step size
      dt = last ? dir * std::max(std::abs(dt), std::abs(h)) : h;
    } else {
      ++st.rejected;
      dt = h;
      if (!std::isfinite(dt) || std::abs(dt) < 1e-14 * std::max(1.0, std::abs(t)) || std::abs(dt) >= std::abs(before))
        throw NumericalError("ode: step size underflow or non-finite right-hand side");
    }
  }
  return st;
}

/// Cubic Hermite interpolation on [t0, t1] from endpoint values and slopes.
inline double hermite(double t0, double y0, double f0, double t1, double y1, double f1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1;
}

}  // namespace vplab
