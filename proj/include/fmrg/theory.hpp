#pragma once

#include <string>

namespace fmrg {

enum class TheoryMethod { tilt, greedy, exact };

std::string to_string(TheoryMethod m);

struct TerminalPrediction {
  TheoryMethod method;
  double mean;
  double variance;
  double expected_reward;
};

// Scalar closed forms for N(mu1, sigma1^2), r(x) = -(x - a)^2, constant lambda.
TerminalPrediction predict_terminal(TheoryMethod method, double mu1, double sigma1, double a, double lambda);

// Greedy guidance applied on [0, t_stop] only, unguided afterwards.
TerminalPrediction predict_early_stop(double mu1, double sigma1, double a, double lambda, double t_stop);

// lambda * grad X_{t,1}^T grad r(X_{t,1}(x)) = -2 lambda M_t^2 (x - x_t^M)
double greedy_control_closed_form(double mu1, double sigma1, double a, double lambda, double t, double x);

double early_stop_variance(double sigma1, double lambda, double t_stop);

// t_stop at which the early-stopped greedy variance equals the exact-control variance.
double solve_t_stop(double sigma1, double lambda);

}  // namespace fmrg
