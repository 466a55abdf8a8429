#include "fmrg/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace fmrg {

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double e : v) m = std::max(m, e);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double e : v) s += std::exp(e - m);
  return m + std::log(s);
}

namespace {

double log_normal_density(const Vector& x, const Vector& mean, const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalFailure("covariance not positive definite");
  const Vector r = x - mean;
  const Vector sol = llt.solve(r);
  const Matrix& l = llt.matrixLLT();
  double logdet = 0.0;
  for (int i = 0; i < l.rows(); ++i) logdet += 2.0 * std::log(l(i, i));
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet + r.dot(sol));
}

}  // namespace

GaussianMixtureTarget::GaussianMixtureTarget(std::vector<GaussianComponent> comps)
    : components(std::move(comps)) {
  if (components.empty()) throw ConfigError("mixture needs at least one component");
  const int d = static_cast<int>(components.front().mean.size());
  check_dim(d);
  double total = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    const std::string tag = "mixture component " + std::to_string(i);
    if (c.mean.size() != d || c.cov.rows() != d || c.cov.cols() != d)
      throw ConfigError(tag + ": dimension mismatch");
    if (!(c.weight >= 0.0)) throw ConfigError(tag + ": negative weight");
    if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.cov.cwiseAbs().maxCoeff()))
      throw ConfigError(tag + ": covariance not symmetric");
    Eigen::LLT<Matrix> llt(c.cov);
    if (llt.info() != Eigen::Success) throw ConfigError(tag + ": covariance not positive definite");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

Vector GaussianMixtureTarget::mean() const {
  Vector m = Vector::Zero(dim());
  for (const auto& c : components) m += c.weight * c.mean;
  return m;
}

double GaussianMixtureTarget::log_density(const Vector& x) const {
  std::vector<double> terms;
  terms.reserve(components.size());
  for (const auto& c : components) {
    if (c.weight == 0.0) continue;
    terms.push_back(std::log(c.weight) + log_normal_density(x, c.mean, c.cov));
  }
  return log_sum_exp(terms);
}

GmmVelocity::GmmVelocity(GaussianMixtureTarget target) : target_(std::move(target)), mean_(target_.mean()) {}

void GmmVelocity::compute(double t, const Vector& x, Vector* value, Matrix* jac) const {
  const int d = target_.dim();
  if (t <= 0.0) {
    // I_0 = x0 carries no information about the component.
    if (value) *value = mean_ - x;
    if (jac) *jac = -Matrix::Identity(d, d);
    return;
  }
  if (t >= 1.0) {
    if (value) *value = x;
    if (jac) *jac = Matrix::Identity(d, d);
    return;
  }
  const std::size_t n = target_.components.size();
  thread_local std::vector<double> logp;
  thread_local std::vector<Vector> drift, grad_log;
  thread_local std::vector<Matrix> gain;
  logp.assign(n, -std::numeric_limits<double>::infinity());
  drift.resize(n);
  grad_log.resize(n);
  if (jac) gain.resize(n);

  const double a2 = (1.0 - t) * (1.0 - t);
  const double t2 = t * t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = target_.components[i];
    if (c.weight == 0.0) continue;
    Matrix sigma = t2 * c.cov;
    sigma.diagonal().array() += a2;
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("gmm_velocity: interpolant covariance not positive definite");
    const Vector r = x - t * c.mean;
    const Vector sol = llt.solve(r);
    const Matrix& l = llt.matrixLLT();
    double logdet = 0.0;
    for (int k = 0; k < d; ++k) logdet += 2.0 * std::log(l(k, k));
    logp[i] = std::log(c.weight) - 0.5 * logdet - 0.5 * r.dot(sol);
    // K = (1/2) dSigma/dt = t S - (1 - t) I
    Matrix k = t * c.cov;
    k.diagonal().array() -= (1.0 - t);
    drift[i] = c.mean + k * sol;
    grad_log[i] = -sol;
    if (jac) gain[i] = llt.solve(k).transpose();
  }

  const double lse = log_sum_exp(logp);
  if (!std::isfinite(lse))
    throw NumericalFailure("gmm_velocity: responsibilities degenerate at t = " + std::to_string(t));

  Vector v = Vector::Zero(d);
  Vector gbar = Vector::Zero(d);
  thread_local std::vector<double> gamma;
  gamma.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(logp[i])) continue;
    gamma[i] = std::exp(logp[i] - lse);
    v += gamma[i] * drift[i];
    gbar += gamma[i] * grad_log[i];
  }
  if (value) *value = v;
  if (jac) {
    Matrix j = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < n; ++i) {
      if (gamma[i] == 0.0) continue;
      j += gamma[i] * gain[i];
      j += gamma[i] * drift[i] * (grad_log[i] - gbar).transpose();
    }
    *jac = j;
  }
}

Vector GmmVelocity::eval(double t, const Vector& x) const {
  Vector v;
  compute(t, x, &v, nullptr);
  return v;
}

Matrix GmmVelocity::jacobian(double t, const Vector& x) const {
  Matrix j;
  compute(t, x, nullptr, &j);
  return j;
}

Vector draw(const GaussianMixtureTarget& target, CounterRng& rng) {
  const double u = rng.uniform();
  std::size_t idx = target.components.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < target.components.size(); ++i) {
    acc += target.components[i].weight;
    if (u < acc && target.components[i].weight > 0.0) {
      idx = i;
      break;
    }
  }
  while (target.components[idx].weight == 0.0 && idx > 0) --idx;
  const auto& c = target.components[idx];
  Eigen::LLT<Matrix> llt(c.cov);
  const Vector z = rng.normal_vector(target.dim());
  return c.mean + llt.matrixL() * z;
}

GaussianMixtureTarget tilt_closed_form_gmm(const GaussianMixtureTarget& target, const Vector& a, double lambda) {
  if (lambda < 0.0) throw ConfigError("tilt: lambda must be >= 0");
  if (lambda == 0.0) return target;
  const int d = target.dim();
  const Matrix eye = Matrix::Identity(d, d);
  std::vector<GaussianComponent> out;
  std::vector<double> logw;
  for (const auto& c : target.components) {
    if (c.weight == 0.0) continue;
    const Matrix prec = c.cov.inverse();
    Matrix cov = (prec + 2.0 * lambda * eye).inverse();
    cov = 0.5 * (cov + cov.transpose());
    Vector mean = cov * (prec * c.mean + 2.0 * lambda * a);
    // int N(x; m, S) exp(-lambda |x - a|^2) dx is proportional to N(a; m, S + I / (2 lambda)).
    logw.push_back(std::log(c.weight) + log_normal_density(a, c.mean, c.cov + eye / (2.0 * lambda)));
    out.push_back({0.0, std::move(mean), std::move(cov)});
  }
  const double lse = log_sum_exp(logw);
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].weight = std::exp(logw[i] - lse);
    total += out[i].weight;
  }
  for (auto& c : out) c.weight /= total;
  return GaussianMixtureTarget(std::move(out));
}

}  // namespace fmrg
