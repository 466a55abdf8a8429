#include "fmrg/velocity.hpp"

#include <cmath>
#include <string>

namespace fmrg {

Vector euler_step(const VelocityField& b, double t, double dt, const Vector& x) {
  if (dt == 0.0) return x;
  return x + dt * b.eval(t, x);
}

Vector rk4_integrate(const VelocityField& b, double s, double t, const Vector& x, std::size_t n_steps) {
  if (n_steps < 1) throw ConfigError("rk4_integrate needs n_steps >= 1");
  if (s == t) return x;
  const double h = (t - s) / static_cast<double>(n_steps);
  Vector y = x;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double ti = s + static_cast<double>(i) * h;
    const Vector k1 = b.eval(ti, y);
    const Vector k2 = b.eval(ti + 0.5 * h, y + 0.5 * h * k1);
    const Vector k3 = b.eval(ti + 0.5 * h, y + 0.5 * h * k2);
    const Vector k4 = b.eval(ti + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite())
      throw NumericalFailure("rk4_integrate: non-finite state at substep " + std::to_string(i) +
                             " (t = " + std::to_string(ti) + ")");
  }
  return y;
}

Vector posterior_mean(const VelocityField& b, const InterpolantSchedule& schedule, double t,
                      const Vector& x) {
  const double a = schedule.alpha(t);
  const double ad = schedule.alpha_dot(t);
  const double be = schedule.beta(t);
  const double bd = schedule.beta_dot(t);
  const double denom = a * bd - ad * be;
  if (denom == 0.0) throw DegenerateSchedule("posterior_mean: alpha*beta' - alpha'*beta vanishes");
  if (schedule.alpha == InterpolantSchedule::linear().alpha &&
      schedule.beta == InterpolantSchedule::linear().beta)
    return euler_step(b, t, 1.0 - t, x);
  return (a * b.eval(t, x) - ad * x) / denom;
}

Matrix finite_difference_jacobian(const VelocityField& b, double t, const Vector& x, double h) {
  const int d = b.dim();
  Matrix j(d, d);
  for (int c = 0; c < d; ++c) {
    Vector xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    j.col(c) = (b.eval(t, xp) - b.eval(t, xm)) / (2.0 * h);
  }
  return j;
}

}  // namespace fmrg
