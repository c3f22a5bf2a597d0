#pragma once

// Classical fourth-order Runge-Kutta step for first-order systems y' = f(t, y).

#include <Eigen/Dense>

namespace nhproj {

template <typename State, typename Rhs>
State rk4_step(const Rhs& f, double t, const State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, (y + 0.5 * h * k1).eval());
  const State k3 = f(t + 0.5 * h, (y + 0.5 * h * k2).eval());
  const State k4 = f(t + h, (y + h * k3).eval());
  return (y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).eval();
}

}  // namespace nhproj
