#include "fmrg/flow_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fmrg {

AnalyticGaussianFlowMap::AnalyticGaussianFlowMap(const GaussianTarget& target)
    : mu_(target.mu1), isotropic_(true), sigma_(target.sigma1) {}

AnalyticGaussianFlowMap::AnalyticGaussianFlowMap(Vector mean, const Matrix& covariance)
    : mu_(std::move(mean)), isotropic_(false) {
  check_dim(static_cast<int>(mu_.size()));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
    throw ConfigError("analytic flow map: covariance not positive definite");
  basis_ = eig.eigenvectors();
  sigmas_ = eig.eigenvalues().cwiseSqrt();
}

double AnalyticGaussianFlowMap::gain(double sigma, double s, double t) const {
  const GaussianCoefficients c{sigma};
  return std::sqrt(c.C(t) / c.C(s));
}

Vector AnalyticGaussianFlowMap::gains(double s, double t) const {
  Vector g(sigmas_.size());
  for (int i = 0; i < sigmas_.size(); ++i) g[i] = gain(sigmas_[i], s, t);
  return g;
}

Vector AnalyticGaussianFlowMap::eval(double s, double t, const Vector& x) const {
  if (s == t) return x;
  if (isotropic_) return t * mu_ + gain(sigma_, s, t) * (x - s * mu_);
  const Vector z = basis_.transpose() * (x - s * mu_);
  return t * mu_ + basis_ * gains(s, t).cwiseProduct(z);
}

Matrix AnalyticGaussianFlowMap::jacobian(double s, double t, const Vector&) const {
  const int d = dim();
  if (s == t) return Matrix::Identity(d, d);
  if (isotropic_) return gain(sigma_, s, t) * Matrix::Identity(d, d);
  return basis_ * gains(s, t).asDiagonal() * basis_.transpose();
}

Vector AnalyticGaussianFlowMap::vjp(double s, double t, const Vector&, const Vector& v) const {
  if (s == t) return v;
  if (isotropic_) return gain(sigma_, s, t) * v;
  return basis_ * gains(s, t).cwiseProduct(basis_.transpose() * v);
}

Pullback AnalyticGaussianFlowMap::pullback(double s, double t, const Vector& x, const CotangentFn& g) const {
  if (isotropic_ && s != t) {
    const double m = gain(sigma_, s, t);
    Vector e = t * mu_ + m * (x - s * mu_);
    Vector v = g(e);
    return {e, m * v};
  }
  Vector e = eval(s, t, x);
  Vector v = g(e);
  return {e, vjp(s, t, x, v)};
}

NumericFlowMap::NumericFlowMap(std::shared_ptr<const VelocityField> velocity, double substeps_per_unit)
    : velocity_(std::move(velocity)), substeps_per_unit_(substeps_per_unit) {
  if (!velocity_) throw ConfigError("numeric flow map needs a velocity field");
  if (!(substeps_per_unit_ > 0.0)) throw ConfigError("numeric flow map: substeps per unit time must be > 0");
}

std::size_t NumericFlowMap::substeps(double s, double t) const {
  const double n = std::ceil(std::abs(t - s) * substeps_per_unit_ - 1e-9);
  return static_cast<std::size_t>(std::max(1.0, n));
}

Vector NumericFlowMap::eval(double s, double t, const Vector& x) const {
  if (s == t) return x;
  return rk4_integrate(*velocity_, s, t, x, substeps(s, t));
}

Matrix NumericFlowMap::jacobian(double s, double t, const Vector& x) const {
  const int d = dim();
  Matrix j = Matrix::Identity(d, d);
  if (s == t) return j;
  const std::size_t n = substeps(s, t);
  const double h = (t - s) / static_cast<double>(n);
  const VelocityField& b = *velocity_;
  Vector y = x;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = s + static_cast<double>(i) * h;
    const Vector y1 = y;
    const Vector k1 = b.eval(ti, y1);
    const Matrix q1 = b.jacobian(ti, y1) * j;
    const Vector y2 = y + 0.5 * h * k1;
    const Vector k2 = b.eval(ti + 0.5 * h, y2);
    const Matrix q2 = b.jacobian(ti + 0.5 * h, y2) * (j + 0.5 * h * q1);
    const Vector y3 = y + 0.5 * h * k2;
    const Vector k3 = b.eval(ti + 0.5 * h, y3);
    const Matrix q3 = b.jacobian(ti + 0.5 * h, y3) * (j + 0.5 * h * q2);
    const Vector y4 = y + h * k3;
    const Vector k4 = b.eval(ti + h, y4);
    const Matrix q4 = b.jacobian(ti + h, y4) * (j + h * q3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    j += (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
    if (!y.allFinite() || !j.allFinite())
      throw NumericalFailure("flow map jacobian: non-finite value at substep " + std::to_string(i));
  }
  return j;
}

Vector NumericFlowMap::forward(double s, double t, const Vector& x, std::size_t n,
                               std::vector<Vector>& stages) const {
  const double h = (t - s) / static_cast<double>(n);
  const VelocityField& b = *velocity_;
  stages.resize(4 * n);
  Vector y = x;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = s + static_cast<double>(i) * h;
    stages[4 * i] = y;
    const Vector k1 = b.eval(ti, y);
    stages[4 * i + 1] = y + 0.5 * h * k1;
    const Vector k2 = b.eval(ti + 0.5 * h, stages[4 * i + 1]);
    stages[4 * i + 2] = y + 0.5 * h * k2;
    const Vector k3 = b.eval(ti + 0.5 * h, stages[4 * i + 2]);
    stages[4 * i + 3] = y + h * k3;
    const Vector k4 = b.eval(ti + h, stages[4 * i + 3]);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite())
      throw NumericalFailure("flow map: non-finite state at substep " + std::to_string(i));
  }
  return y;
}

Vector NumericFlowMap::adjoint(double s, double t, std::size_t n, const std::vector<Vector>& stages,
                               const Vector& v) const {
  const double h = (t - s) / static_cast<double>(n);
  const VelocityField& b = *velocity_;
  Vector lam = v;
  for (std::size_t i = n; i-- > 0;) {
    const double ti = s + static_cast<double>(i) * h;
    Vector a4 = (h / 6.0) * lam;
    Vector a3 = (h / 3.0) * lam;
    Vector a2 = (h / 3.0) * lam;
    Vector a1 = (h / 6.0) * lam;
    const Vector g4 = b.jacobian_transpose_times(ti + h, stages[4 * i + 3], a4);
    a3 += h * g4;
    const Vector g3 = b.jacobian_transpose_times(ti + 0.5 * h, stages[4 * i + 2], a3);
    a2 += 0.5 * h * g3;
    const Vector g2 = b.jacobian_transpose_times(ti + 0.5 * h, stages[4 * i + 1], a2);
    a1 += 0.5 * h * g2;
    const Vector g1 = b.jacobian_transpose_times(ti, stages[4 * i], a1);
    lam += g1 + g2 + g3 + g4;
    if (!lam.allFinite())
      throw NumericalFailure("flow map vjp: non-finite adjoint at substep " + std::to_string(i));
  }
  return lam;
}

Vector NumericFlowMap::vjp(double s, double t, const Vector& x, const Vector& v) const {
  if (s == t) return v;
  const std::size_t n = substeps(s, t);
  std::vector<Vector> stages;
  forward(s, t, x, n, stages);
  return adjoint(s, t, n, stages, v);
}

Pullback NumericFlowMap::pullback(double s, double t, const Vector& x, const CotangentFn& g) const {
  if (s == t) {
    Vector v = g(x);
    return {x, v};
  }
  const std::size_t n = substeps(s, t);
  std::vector<Vector> stages;
  Vector e = forward(s, t, x, n, stages);
  Vector v = g(e);
  return {e, adjoint(s, t, n, stages, v)};
}

Vector EulerFlowMap::eval(double s, double t, const Vector& x) const {
  if (s == t) return x;
  return x + (t - s) * velocity_->eval(s, x);
}

Matrix EulerFlowMap::jacobian(double s, double t, const Vector& x) const {
  const int d = dim();
  if (s == t) return Matrix::Identity(d, d);
  return Matrix::Identity(d, d) + (t - s) * velocity_->jacobian(s, x);
}

Vector EulerFlowMap::vjp(double s, double t, const Vector& x, const Vector& v) const {
  if (s == t) return v;
  return v + (t - s) * velocity_->jacobian_transpose_times(s, x, v);
}

std::unique_ptr<FlowMap> make_flow_map(const Target& target, double substeps_per_unit) {
  if (const auto* g = std::get_if<GaussianTarget>(&target)) return std::make_unique<AnalyticGaussianFlowMap>(*g);
  if (const auto* dg = std::get_if<DegenerateGaussianTarget>(&target))
    return std::make_unique<AnalyticGaussianFlowMap>(dg->mu1, dg->covariance());
  std::shared_ptr<const VelocityField> b = make_velocity(target);
  return std::make_unique<NumericFlowMap>(std::move(b), substeps_per_unit);
}

Vector linearized_step(double t_k, double t_next, const Vector& x, const Vector& endpoint) {
  if (t_k >= 1.0) throw DegenerateSchedule("linearized_step: t_k = 1 leaves no interval to interpolate");
  if (t_next == 1.0) return endpoint;
  if (t_next == t_k) return x;
  return x + ((t_next - t_k) / (1.0 - t_k)) * (endpoint - x);
}

double check_semigroup(const FlowMap& map, double s, double u, double t, const Vector& x) {
  return (map.eval(s, t, x) - map.eval(u, t, map.eval(s, u, x))).norm();
}

Matrix finite_difference_flow_jacobian(const FlowMap& map, double s, double t, const Vector& x, double h) {
  const int d = map.dim();
  Matrix j(d, d);
  for (int c = 0; c < d; ++c) {
    Vector xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    j.col(c) = (map.eval(s, t, xp) - map.eval(s, t, xm)) / (2.0 * h);
  }
  return j;
}

}  // namespace fmrg
