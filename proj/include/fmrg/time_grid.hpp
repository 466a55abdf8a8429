#pragma once

#include <cstddef>
#include <vector>

namespace fmrg {

// Ordered knots 0 = t_0 < ... < t_N = 1.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> knots);

  static TimeGrid uniform(std::size_t n_steps);

  const std::vector<double>& knots() const { return knots_; }
  std::size_t steps() const { return knots_.size() - 1; }
  double operator[](std::size_t k) const { return knots_[k]; }
  double dt(std::size_t k) const { return knots_[k + 1] - knots_[k]; }

  // First knot strictly greater than t, or 1 when t is at or past the end.
  double next_after(double t) const;

 private:
  std::vector<double> knots_;
};

// alpha/beta of the interpolant I_t = alpha_t x0 + beta_t x1.
struct InterpolantSchedule {
  double (*alpha)(double);
  double (*beta)(double);
  double (*alpha_dot)(double);
  double (*beta_dot)(double);

  static InterpolantSchedule linear();
};

}  // namespace fmrg
