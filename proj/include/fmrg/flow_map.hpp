#pragma once

#include "fmrg/targets.hpp"
#include "fmrg/types.hpp"
#include "fmrg/velocity.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace fmrg {

struct Pullback {
  Vector endpoint;   // X_{s,t}(x)
  Vector cotangent;  // grad X_{s,t}(x)^T g(X_{s,t}(x))
};

using CotangentFn = std::function<Vector(const Vector&)>;

// Two-time solution operator X_{s,t} of the probability flow.
class FlowMap {
 public:
  virtual ~FlowMap() = default;
  virtual int dim() const = 0;
  virtual Vector eval(double s, double t, const Vector& x) const = 0;
  virtual Matrix jacobian(double s, double t, const Vector& x) const = 0;
  virtual Vector vjp(double s, double t, const Vector& x, const Vector& v) const = 0;
  // Endpoint plus the pullback of g(endpoint), sharing one forward pass.
  virtual Pullback pullback(double s, double t, const Vector& x, const CotangentFn& g) const {
    Vector e = eval(s, t, x);
    Vector v = g(e);
    return {e, vjp(s, t, x, v)};
  }
};

// Closed-form flow of a Gaussian target, isotropic or with full covariance
// (handled in the covariance eigenbasis).
class AnalyticGaussianFlowMap final : public FlowMap {
 public:
  explicit AnalyticGaussianFlowMap(const GaussianTarget& target);
  AnalyticGaussianFlowMap(Vector mean, const Matrix& covariance);

  int dim() const override { return static_cast<int>(mu_.size()); }
  Vector eval(double s, double t, const Vector& x) const override;
  Matrix jacobian(double s, double t, const Vector& x) const override;
  Vector vjp(double s, double t, const Vector& x, const Vector& v) const override;
  Pullback pullback(double s, double t, const Vector& x, const CotangentFn& g) const override;

 private:
  double gain(double sigma, double s, double t) const;
  Vector gains(double s, double t) const;

  Vector mu_;
  bool isotropic_;
  double sigma_ = 1.0;
  Matrix basis_;
  Vector sigmas_;
};

// RK4 oracle for X_{s,t}; Jacobians by the co-integrated variational equation,
// VJPs by the discrete adjoint on the stored forward stages.
class NumericFlowMap final : public FlowMap {
 public:
  explicit NumericFlowMap(std::shared_ptr<const VelocityField> velocity, double substeps_per_unit = 1000.0);

  int dim() const override { return velocity_->dim(); }
  Vector eval(double s, double t, const Vector& x) const override;
  Matrix jacobian(double s, double t, const Vector& x) const override;
  Vector vjp(double s, double t, const Vector& x, const Vector& v) const override;
  Pullback pullback(double s, double t, const Vector& x, const CotangentFn& g) const override;

  std::size_t substeps(double s, double t) const;
  const VelocityField& velocity() const { return *velocity_; }

 private:
  Vector forward(double s, double t, const Vector& x, std::size_t n, std::vector<Vector>& stages) const;
  Vector adjoint(double s, double t, std::size_t n, const std::vector<Vector>& stages, const Vector& v) const;

  std::shared_ptr<const VelocityField> velocity_;
  double substeps_per_unit_;
};

// One-step Euler surrogate X_{s,t}(x) = x + (t - s) b_s(x).
class EulerFlowMap final : public FlowMap {
 public:
  explicit EulerFlowMap(std::shared_ptr<const VelocityField> velocity) : velocity_(std::move(velocity)) {}

  int dim() const override { return velocity_->dim(); }
  Vector eval(double s, double t, const Vector& x) const override;
  Matrix jacobian(double s, double t, const Vector& x) const override;
  Vector vjp(double s, double t, const Vector& x, const Vector& v) const override;

 private:
  std::shared_ptr<const VelocityField> velocity_;
};

// Exact map when one exists (Gaussian and degenerate targets), RK4 oracle otherwise.
std::unique_ptr<FlowMap> make_flow_map(const Target& target, double substeps_per_unit = 1000.0);

// x + ((t_next - t_k) / (1 - t_k)) (endpoint - x)
Vector linearized_step(double t_k, double t_next, const Vector& x, const Vector& endpoint);

double check_semigroup(const FlowMap& map, double s, double u, double t, const Vector& x);

Matrix finite_difference_flow_jacobian(const FlowMap& map, double s, double t, const Vector& x, double h = 1e-4);

}  // namespace fmrg
