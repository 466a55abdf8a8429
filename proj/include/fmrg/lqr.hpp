#pragma once

#include "fmrg/flow_map.hpp"
#include "fmrg/rewards.hpp"
#include "fmrg/targets.hpp"

namespace fmrg {

// Gain of the exact LQR feedback for N(mu1, sigma1^2) with r = -|x - a|^2.
struct RiccatiSolution {
  double sigma1;
  double lambda;

  double Q(double t) const;
  double P(double t) const { return 1.0 / Q(t); }
  // Right-hand side of -dP/dt = (Cdot / C) P - lambda P^2.
  double riccati_rhs(double t) const;
};

// x_t^M = t mu1 + (a - mu1) / M_t
Vector reference_trajectory(const GaussianTarget& target, const Vector& a, double t);

Vector lqr_exact_control(const GaussianTarget& target, const Vector& a, double lambda, double t, const Vector& x);

// V1_t(x) = -1/2 int_t^1 |grad X_{tau,1}(y)^T grad r(X_{tau,1}(y))|^2 dtau,
// with y = X_{t,tau}(x) the unguided characteristic.
double first_order_value(const FlowMap& map, const Reward& r, double t, const Vector& x);

// Central differences of first_order_value.
Vector first_order_value_grad(const FlowMap& map, const Reward& r, double t, const Vector& x, double h = 1e-3);

}  // namespace fmrg
