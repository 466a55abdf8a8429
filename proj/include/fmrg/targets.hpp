#pragma once

#include "fmrg/rng.hpp"
#include "fmrg/types.hpp"
#include "fmrg/velocity.hpp"

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

namespace fmrg {

// C_t, its derivative and M_t for N(mu1, sigma1^2) under the linear interpolant.
struct GaussianCoefficients {
  double sigma1;

  double C(double t) const { return (1.0 - t) * (1.0 - t) + t * t * sigma1 * sigma1; }
  double Cdot(double t) const { return -2.0 * (1.0 - t) + 2.0 * t * sigma1 * sigma1; }
  double M(double t) const;
  // int_t^1 dtau / C_tau
  double integral_inv_C(double t) const;
};

struct GaussianTarget {
  Vector mu1;
  double sigma1;

  GaussianTarget(Vector mu, double sigma);
  int dim() const { return static_cast<int>(mu1.size()); }
  GaussianCoefficients coefficients() const { return {sigma1}; }
};

struct GaussianComponent {
  double weight;
  Vector mean;
  Matrix cov;
};

struct GaussianMixtureTarget {
  std::vector<GaussianComponent> components;

  explicit GaussianMixtureTarget(std::vector<GaussianComponent> comps);
  int dim() const { return static_cast<int>(components.front().mean.size()); }
  Vector mean() const;
  double log_density(const Vector& x) const;
};

// Anisotropic Gaussian concentrated near mu1 + span(basis).
struct DegenerateGaussianTarget {
  Vector mu1;
  Matrix basis;  // d x k, orthonormal columns
  double sigma_par;
  double sigma_perp;

  DegenerateGaussianTarget(Vector mu, Matrix u, double s_par, double s_perp = 1e-3);
  int dim() const { return static_cast<int>(mu1.size()); }
  Matrix covariance() const;
  GaussianMixtureTarget as_mixture() const;
};

using Target = std::variant<GaussianTarget, GaussianMixtureTarget, DegenerateGaussianTarget>;

int target_dim(const Target& target);

class GaussianVelocity final : public VelocityField {
 public:
  explicit GaussianVelocity(GaussianTarget target) : target_(std::move(target)) {}
  int dim() const override { return target_.dim(); }
  Vector eval(double t, const Vector& x) const override;
  Matrix jacobian(double t, const Vector& x) const override;
  Vector jacobian_transpose_times(double t, const Vector& x, const Vector& v) const override;
  const GaussianTarget& target() const { return target_; }

 private:
  GaussianTarget target_;
};

class GmmVelocity final : public VelocityField {
 public:
  explicit GmmVelocity(GaussianMixtureTarget target);
  int dim() const override { return target_.dim(); }
  Vector eval(double t, const Vector& x) const override;
  Matrix jacobian(double t, const Vector& x) const override;
  const GaussianMixtureTarget& target() const { return target_; }

 private:
  struct Terms;
  void compute(double t, const Vector& x, Vector* value, Matrix* jac) const;
  GaussianMixtureTarget target_;
  Vector mean_;
};

std::unique_ptr<VelocityField> make_velocity(const Target& target);

Vector draw(const GaussianTarget& target, CounterRng& rng);
Vector draw(const GaussianMixtureTarget& target, CounterRng& rng);
Vector draw(const DegenerateGaussianTarget& target, CounterRng& rng);
Vector draw(const Target& target, CounterRng& rng);

// n i.i.d. samples; sample i uses stream i of the seed.
template <class T>
std::vector<Vector> sample_target(const T& target, std::size_t n, std::uint64_t seed) {
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    out.push_back(draw(target, rng));
  }
  return out;
}

GaussianTarget tilt_closed_form_gaussian(const GaussianTarget& target, const Vector& a, double lambda);
GaussianMixtureTarget tilt_closed_form_gmm(const GaussianMixtureTarget& target, const Vector& a, double lambda);

double log_sum_exp(const std::vector<double>& v);

}  // namespace fmrg
