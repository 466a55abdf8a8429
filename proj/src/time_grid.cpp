#include "fmrg/time_grid.hpp"

#include "fmrg/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fmrg {

TimeGrid::TimeGrid(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw ConfigError("time grid needs at least two knots");
  if (knots_.front() != 0.0 || knots_.back() != 1.0)
    throw ConfigError("time grid must start at 0 and end at 1");
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    if (!(knots_[k + 1] > knots_[k]))
      throw ConfigError("time grid not strictly increasing at knot " + std::to_string(k + 1));
  }
}

TimeGrid TimeGrid::uniform(std::size_t n_steps) {
  if (n_steps < 1) throw ConfigError("uniform grid needs n_steps >= 1");
  std::vector<double> knots(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k)
    knots[k] = static_cast<double>(k) / static_cast<double>(n_steps);
  knots.back() = 1.0;
  return TimeGrid(std::move(knots));
}

double TimeGrid::next_after(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return it == knots_.end() ? 1.0 : *it;
}

namespace {
double lin_alpha(double t) { return 1.0 - t; }
double lin_beta(double t) { return t; }
double lin_alpha_dot(double) { return -1.0; }
double lin_beta_dot(double) { return 1.0; }
}  // namespace

InterpolantSchedule InterpolantSchedule::linear() {
  return {lin_alpha, lin_beta, lin_alpha_dot, lin_beta_dot};
}

}  // namespace fmrg
