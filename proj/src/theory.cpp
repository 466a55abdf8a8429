#include "fmrg/theory.hpp"

#include "fmrg/types.hpp"

#include <cmath>
#include <numbers>

namespace fmrg {

namespace {

void check(double sigma1, double lambda) {
  if (!(sigma1 > 0.0)) throw ConfigError("theory: sigma1 must be > 0");
  if (!(lambda >= 0.0)) throw ConfigError("theory: lambda must be >= 0");
}

TerminalPrediction make(TheoryMethod m, double mean, double var, double a) {
  return {m, mean, var, -(var + (mean - a) * (mean - a))};
}

// Contraction of the deviation from the reference trajectory accumulated by
// greedy guidance on [0, t_stop].
double greedy_contraction(double sigma1, double lambda, double t_stop) {
  const double angle = t_stop >= 1.0 ? 0.5 * std::numbers::pi : std::atan(sigma1 * t_stop / (1.0 - t_stop));
  return std::exp(-2.0 * lambda * sigma1 * angle);
}

}  // namespace

std::string to_string(TheoryMethod m) {
  switch (m) {
    case TheoryMethod::tilt: return "tilt";
    case TheoryMethod::greedy: return "greedy";
    case TheoryMethod::exact: return "exact";
  }
  return "unknown";
}

TerminalPrediction predict_terminal(TheoryMethod method, double mu1, double sigma1, double a, double lambda) {
  check(sigma1, lambda);
  const double s2 = sigma1 * sigma1;
  switch (method) {
    case TheoryMethod::tilt: {
      const double k = 1.0 + 2.0 * lambda * s2;
      return make(method, (mu1 + 2.0 * lambda * s2 * a) / k, s2 / k, a);
    }
    case TheoryMethod::greedy: {
      const double e = std::exp(-std::numbers::pi * lambda * sigma1);
      return make(method, a + (mu1 - a) * e, s2 * e * e, a);
    }
    case TheoryMethod::exact: {
      const double k = 1.0 + std::numbers::pi * lambda * sigma1;
      return make(method, a + (mu1 - a) / k, s2 / (k * k), a);
    }
  }
  throw ConfigError("unknown theory method");
}

TerminalPrediction predict_early_stop(double mu1, double sigma1, double a, double lambda, double t_stop) {
  check(sigma1, lambda);
  if (!(t_stop > 0.0 && t_stop <= 1.0)) throw ConfigError("theory: t_stop must lie in (0, 1]");
  const double phi = greedy_contraction(sigma1, lambda, t_stop);
  return make(TheoryMethod::greedy, a + (mu1 - a) * phi, sigma1 * sigma1 * phi * phi, a);
}

double greedy_control_closed_form(double mu1, double sigma1, double a, double lambda, double t, double x) {
  check(sigma1, lambda);
  const double c = (1.0 - t) * (1.0 - t) + t * t * sigma1 * sigma1;
  const double m = sigma1 / std::sqrt(c);
  const double xm = t * mu1 + (a - mu1) / m;
  return -2.0 * lambda * m * m * (x - xm);
}

double early_stop_variance(double sigma1, double lambda, double t_stop) {
  check(sigma1, lambda);
  if (!(t_stop > 0.0 && t_stop <= 1.0)) throw ConfigError("theory: t_stop must lie in (0, 1]");
  const double phi = greedy_contraction(sigma1, lambda, t_stop);
  return sigma1 * sigma1 * phi * phi;
}

double solve_t_stop(double sigma1, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("solve_t_stop: lambda must be > 0");
  check(sigma1, lambda);
  const double y = std::numbers::pi * lambda * sigma1;
  const double target = sigma1 * sigma1 / ((1.0 + y) * (1.0 + y));
  const double theta = std::log1p(y) / (2.0 * lambda * sigma1);
  if (!(theta < 0.5 * std::numbers::pi)) throw NumericalFailure("solve_t_stop: theta >= pi/2");
  const double tn = std::tan(theta);
  double t = tn / (sigma1 + tn);
  if (t > 0.0 && t <= 1.0 && std::abs(early_stop_variance(sigma1, lambda, t) - target) <= 1e-12 * target)
    return t;
  // Variance is decreasing in t_stop; bisect.
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    if (early_stop_variance(sigma1, lambda, mid) > target) lo = mid;
    else hi = mid;
  }
  t = 0.5 * (lo + hi);
  return t;
}

}  // namespace fmrg
