#pragma once

#include "ovio/geometry.hpp"

namespace ovio {

/// Classical RK4 step for a state in R^n with field f(x). The field is
/// autonomous over the step; time-dependence enters through values the
/// caller froze when building f.
template <typename State, typename Field>
State rk4_step(const State& x, Field&& f, double dt) {
  const State k1 = f(x);
  const State k2 = f(State(x + 0.5 * dt * k1));
  const State k3 = f(State(x + 0.5 * dt * k2));
  const State k4 = f(State(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// RK4 step for a time-varying field f(x, tau), tau in [0, dt] relative to
/// the step start.
template <typename State, typename Field>
State rk4_step_tv(const State& x, Field&& f, double dt) {
  const State k1 = f(x, 0.0);
  const State k2 = f(State(x + 0.5 * dt * k1), 0.5 * dt);
  const State k3 = f(State(x + 0.5 * dt * k2), 0.5 * dt);
  const State k4 = f(State(x + dt * k3), dt);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Geometric increment for Ṙ = R ω(t)^×: R(t0+h) = R(t0)·exp(h·ω(t0+h/2)).
/// Midpoint sampling makes this a second-order Magnus scheme while keeping
/// the result on SO(3) exactly.
template <typename OmegaFn>
Rotation rotation_increment(const Rotation& r, OmegaFn&& omega, double t0,
                            double h) {
  return r * exp_so3(h * omega(t0 + 0.5 * h));
}

}  // namespace ovio
