#pragma once

#include "fmrg/time_grid.hpp"
#include "fmrg/types.hpp"

#include <cstddef>
#include <functional>

namespace fmrg {

class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual int dim() const = 0;
  virtual Vector eval(double t, const Vector& x) const = 0;
  virtual Matrix jacobian(double t, const Vector& x) const = 0;
  // grad b_t(x)^T v
  virtual Vector jacobian_transpose_times(double t, const Vector& x, const Vector& v) const {
    return jacobian(t, x).transpose() * v;
  }
};

// b_t(x) + u(t, x) for a supplied additive control. The control Jacobian is
// taken from the optional callback (zero when absent).
class ControlledVelocity final : public VelocityField {
 public:
  using Control = std::function<Vector(double, const Vector&)>;
  using ControlJacobian = std::function<Matrix(double, const Vector&)>;

  ControlledVelocity(const VelocityField& base, Control u, ControlJacobian du = {})
      : base_(base), u_(std::move(u)), du_(std::move(du)) {}

  int dim() const override { return base_.dim(); }
  Vector eval(double t, const Vector& x) const override { return base_.eval(t, x) + u_(t, x); }
  Matrix jacobian(double t, const Vector& x) const override {
    Matrix j = base_.jacobian(t, x);
    if (du_) j += du_(t, x);
    return j;
  }

 private:
  const VelocityField& base_;
  Control u_;
  ControlJacobian du_;
};

Vector euler_step(const VelocityField& b, double t, double dt, const Vector& x);

// Classical RK4 with n_steps uniform substeps from s to t (t < s runs backward).
Vector rk4_integrate(const VelocityField& b, double s, double t, const Vector& x, std::size_t n_steps);

// Posterior mean E[x1 | I_t = x] from the velocity.
Vector posterior_mean(const VelocityField& b, const InterpolantSchedule& schedule, double t,
                      const Vector& x);

// Central-difference Jacobian of b_t at x.
Matrix finite_difference_jacobian(const VelocityField& b, double t, const Vector& x, double h = 1e-4);

}  // namespace fmrg
