#pragma once

#include "fmrg/config.hpp"
#include "fmrg/ensemble.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fmrg {

struct CheckResult {
  std::string name;
  double value;      // worst residual observed
  double tolerance;  // pass when value <= tolerance
  bool passed;
};

struct CheckReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  void add(std::string name, double value, double tolerance);
};

// One summary per (method, lambda). Method names "greedy" and "exact" stand
// for fmrg-j with the constant schedule and the LQR feedback.
std::vector<EnsembleSummary> lambda_sweep(const ExperimentConfig& cfg, unsigned threads = 1);

// fmrg-j with the constant schedule at each configured t_stop, followed by a
// row labelled "fmrg-j-solved" at solve_t_stop(sigma1, lambda).
std::vector<EnsembleSummary> early_stop_study(const ExperimentConfig& cfg, unsigned threads = 1);

struct SlopeFit {
  double slope;
  double intercept;
  double slope_se;
  double ci_low;  // 95% Student-t interval
  double ci_high;
};

// Least squares of log y on log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SlopeResult {
  std::vector<double> lambdas;
  std::vector<double> gaps;            // |u_lqr - u_J|
  std::vector<double> corrected_gaps;  // |u_lqr - u_J + lambda^2 grad V1|
  SlopeFit raw;
  SlopeFit corrected;
};

// Probe (slope_t, slope_x) on the 1-D Gaussian target with quadratic reward.
SlopeResult scaling_slope(const ExperimentConfig& cfg);

// Euler-substituted guidance identities over randomized Gaussian and mixture
// cases.
CheckReport reduction_check(std::uint64_t seed, std::size_t cases = 50, double tolerance = 1e-10);

// Jump, semigroup, Lagrangian, Eulerian and derivative suites for the
// analytic Gaussian map and the numeric mixture map.
CheckReport flow_map_axioms(std::uint64_t seed);

// |vjp(t, 1, x, v_perp)| / |vjp(t, 1, x, v_par)| for unit v_perp orthogonal
// to the basis and unit v_par inside it.
double tangent_attenuation(const DegenerateGaussianTarget& target, double t, const Vector& x);

struct InverseRow {
  std::string method;
  std::size_t nfe;
  double median_error;  // median |A x1 - y|^2
  double mean_loglik;   // mean log rho1(x1)
};

struct InverseReport {
  Vector truth;
  double y;
  std::vector<InverseRow> rows;
};

// Recover the first coordinate of a held-out mixture sample; every guided
// method runs at inverse.nfe evaluations.
InverseReport toy_inverse_problem(const ExperimentConfig& cfg, unsigned threads = 1);

}  // namespace fmrg
