#include "fmrg/targets.hpp"

#include <cmath>
#include <numbers>

namespace fmrg {

double GaussianCoefficients::M(double t) const { return sigma1 / std::sqrt(C(t)); }

double GaussianCoefficients::integral_inv_C(double t) const {
  if (t >= 1.0) return 0.0;
  // z = tau / (1 - tau) maps [t, 1) to [z_t, inf) with dtau / C = dz / (1 + sigma^2 z^2).
  return (0.5 * std::numbers::pi - std::atan(sigma1 * t / (1.0 - t))) / sigma1;
}

GaussianTarget::GaussianTarget(Vector mu, double sigma) : mu1(std::move(mu)), sigma1(sigma) {
  check_dim(static_cast<int>(mu1.size()));
  if (!(sigma1 > 0.0) || !std::isfinite(sigma1)) throw ConfigError("GaussianTarget: sigma1 must be > 0");
}

Vector GaussianVelocity::eval(double t, const Vector& x) const {
  const auto c = target_.coefficients();
  const double g = c.Cdot(t) / (2.0 * c.C(t));
  return target_.mu1 + g * (x - t * target_.mu1);
}

Matrix GaussianVelocity::jacobian(double t, const Vector&) const {
  const auto c = target_.coefficients();
  const int d = target_.dim();
  return Matrix::Identity(d, d) * (c.Cdot(t) / (2.0 * c.C(t)));
}

Vector GaussianVelocity::jacobian_transpose_times(double t, const Vector&, const Vector& v) const {
  const auto c = target_.coefficients();
  return v * (c.Cdot(t) / (2.0 * c.C(t)));
}

Vector draw(const GaussianTarget& target, CounterRng& rng) {
  return target.mu1 + target.sigma1 * rng.normal_vector(target.dim());
}

GaussianTarget tilt_closed_form_gaussian(const GaussianTarget& target, const Vector& a, double lambda) {
  if (lambda < 0.0) throw ConfigError("tilt: lambda must be >= 0");
  if (lambda == 0.0) return target;
  const double s2 = target.sigma1 * target.sigma1;
  const double k = 1.0 + 2.0 * lambda * s2;
  Vector mu = (target.mu1 + 2.0 * lambda * s2 * a) / k;
  return GaussianTarget(std::move(mu), std::sqrt(s2 / k));
}

}  // namespace fmrg
