#include "fmrg/lqr.hpp"

#include "fmrg/guidance.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace fmrg {

double RiccatiSolution::Q(double t) const {
  const GaussianCoefficients c{sigma1};
  return c.C(t) * (1.0 / (2.0 * sigma1 * sigma1) + lambda * c.integral_inv_C(t));
}

double RiccatiSolution::riccati_rhs(double t) const {
  const GaussianCoefficients c{sigma1};
  const double p = P(t);
  return c.Cdot(t) / c.C(t) * p - lambda * p * p;
}

Vector reference_trajectory(const GaussianTarget& target, const Vector& a, double t) {
  const double m = target.coefficients().M(t);
  return t * target.mu1 + (a - target.mu1) / m;
}

Vector lqr_exact_control(const GaussianTarget& target, const Vector& a, double lambda, double t, const Vector& x) {
  if (lambda == 0.0) return Vector::Zero(x.size());
  const RiccatiSolution ric{target.sigma1, lambda};
  return -lambda * ric.P(t) * (x - reference_trajectory(target, a, t));
}

double first_order_value(const FlowMap& map, const Reward& r, double t, const Vector& x) {
  if (t >= 1.0) return 0.0;
  auto integrand = [&](double tau) {
    const Vector y = map.eval(t, tau, x);
    return greedy_guidance_signal(map, r, tau, y, GradientVariant::jacobian).squaredNorm();
  };
  double err = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, t, 1.0, 15, 1e-14, &err);
  return -0.5 * integral;
}

Vector first_order_value_grad(const FlowMap& map, const Reward& r, double t, const Vector& x, double h) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (first_order_value(map, r, t, xp) - first_order_value(map, r, t, xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace fmrg
