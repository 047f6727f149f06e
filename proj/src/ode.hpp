#pragma once

#include <algorithm>
#include <complex>
#include <functional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "ellcov/errors.hpp"

namespace ellcov::detail {

using OdeState = std::vector<std::complex<double>>;

struct OdeOptions {
  double max_step = 0.05;
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double min_step = 1e-14;
};

// Integrates dy/dt = f(t, y) over t in [0, 1] with an adaptive Dormand-Prince
// 5(4) pair. A step whose right-hand side hits NearSingularity or
// InvalidModulus is retried with a quarter of the step.
template <class Rhs>
OdeState integrate_unit_interval(OdeState y, Rhs&& f, const OdeOptions& opt,
                                 const std::function<void(double, const OdeState&)>& observer = {}) {
  namespace odeint = boost::numeric::odeint;
  using Stepper = odeint::runge_kutta_dopri5<OdeState, double, OdeState, double>;
  auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, Stepper());
  auto system = [&](const OdeState& x, OdeState& dxdt, double t) { f(t, x, dxdt); };

  double t = 0.0;
  double dt = std::min(opt.max_step, 0.01);
  while (t < 1.0) {
    dt = std::min({dt, opt.max_step, 1.0 - t});
    const OdeState saved = y;
    const double t_saved = t;
    odeint::controlled_step_result res;
    try {
      res = stepper.try_step(system, y, t, dt);
    } catch (const NearSingularity&) {
      y = saved;
      t = t_saved;
      stepper.reset();
      dt *= 0.25;
      if (dt < opt.min_step) {
        throw SingularityOnPath("flow integration: singular configuration on the path at t = " +
                                std::to_string(t));
      }
      continue;
    } catch (const InvalidModulus&) {
      y = saved;
      t = t_saved;
      stepper.reset();
      dt *= 0.25;
      if (dt < opt.min_step) {
        throw SingularityOnPath("flow integration: modulus left the upper half plane at t = " +
                                std::to_string(t));
      }
      continue;
    }
    if (res == odeint::fail) {
      if (dt < opt.min_step) {
        throw StepSizeUnderflow("flow integration: step size underflow at t = " + std::to_string(t));
      }
      continue;
    }
    if (1.0 - t < 1e-15) t = 1.0;
    if (observer) observer(t, y);
  }
  return y;
}

}  // namespace ellcov::detail
