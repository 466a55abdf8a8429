#include "fmrg/targets.hpp"

#include <cmath>

namespace fmrg {

DegenerateGaussianTarget::DegenerateGaussianTarget(Vector mu, Matrix u, double s_par, double s_perp)
    : mu1(std::move(mu)), basis(std::move(u)), sigma_par(s_par), sigma_perp(s_perp) {
  const int d = static_cast<int>(mu1.size());
  check_dim(d);
  if (basis.rows() != d || basis.cols() < 1 || basis.cols() > d)
    throw ConfigError("degenerate target: basis must be d x k with 1 <= k <= d");
  const int k = static_cast<int>(basis.cols());
  const double ortho = (basis.transpose() * basis - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
  if (ortho > 1e-12) throw ConfigError("degenerate target: basis columns not orthonormal");
  if (!(sigma_perp > 0.0) || !(sigma_par > sigma_perp))
    throw ConfigError("degenerate target: need 0 < sigma_perp < sigma_par");
}

Matrix DegenerateGaussianTarget::covariance() const {
  const int d = dim();
  const Matrix proj = basis * basis.transpose();
  Matrix cov = sigma_par * sigma_par * proj +
               sigma_perp * sigma_perp * (Matrix::Identity(d, d) - proj);
  return 0.5 * (cov + cov.transpose());
}

GaussianMixtureTarget DegenerateGaussianTarget::as_mixture() const {
  return GaussianMixtureTarget({{1.0, mu1, covariance()}});
}

int target_dim(const Target& target) {
  return std::visit([](const auto& t) { return t.dim(); }, target);
}

std::unique_ptr<VelocityField> make_velocity(const Target& target) {
  if (const auto* g = std::get_if<GaussianTarget>(&target)) return std::make_unique<GaussianVelocity>(*g);
  if (const auto* m = std::get_if<GaussianMixtureTarget>(&target)) return std::make_unique<GmmVelocity>(*m);
  return std::make_unique<GmmVelocity>(std::get<DegenerateGaussianTarget>(target).as_mixture());
}

Vector draw(const DegenerateGaussianTarget& target, CounterRng& rng) {
  const int d = target.dim();
  const int k = static_cast<int>(target.basis.cols());
  const Vector zk = rng.normal_vector(k);
  const Vector z = rng.normal_vector(d);
  const Vector par = target.basis * zk;
  const Matrix proj = target.basis * target.basis.transpose();
  const Vector perp = (Matrix::Identity(d, d) - proj) * z;
  return target.mu1 + target.sigma_par * par + target.sigma_perp * perp;
}

Vector draw(const Target& target, CounterRng& rng) {
  return std::visit([&](const auto& t) { return draw(t, rng); }, target);
}

}  // namespace fmrg
