#include "helpers.hpp"

#include "fmrg/flow_map.hpp"
#include "fmrg/guidance.hpp"
#include "fmrg/rewards.hpp"
#include "fmrg/theory.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fmrg;
using fmrg::test::scalar;

namespace {

constexpr double kPi = std::numbers::pi;

double log_var(TheoryMethod m, double s, double lambda) { return std::log(predict_terminal(m, 0.0, s, 1.0, lambda).variance); }

}  // namespace

TEST_SUITE("gaussian_theory") {
  TEST_CASE("no guidance returns the unguided moments") {
    const double mu = 0.4, s = 1.3, a = -0.2;
    for (auto m : {TheoryMethod::tilt, TheoryMethod::greedy, TheoryMethod::exact}) {
      const auto p = predict_terminal(m, mu, s, a, 0.0);
      CHECK(p.mean == doctest::Approx(mu).epsilon(1e-15));
      CHECK(p.variance == doctest::Approx(s * s).epsilon(1e-15));
      CHECK(p.expected_reward == doctest::Approx(-(s * s + (mu - a) * (mu - a))).epsilon(1e-15));
      CHECK(p.method == m);
    }
  }

  TEST_CASE("closed-form examples") {
    const auto g = predict_terminal(TheoryMethod::greedy, 0.0, 1.0, 1.0, 1 / (2 * kPi));
    CHECK(g.variance == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    const double mu = 0.6, a = 2.0;
    const auto e = predict_terminal(TheoryMethod::exact, mu, 1.0, a, 1 / kPi);
    CHECK(e.variance == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(e.mean == doctest::Approx(a + (mu - a) / 2).epsilon(1e-14));
    const auto t = predict_terminal(TheoryMethod::tilt, 0.0, 1.0, 2.0, 0.5);
    CHECK(t.variance == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.mean == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("predictions are proper") {
    for (double s : {0.3, 1.0, 3.0})
      for (double lambda : {0.01, 0.5, 5.0, 20.0})
        for (auto m : {TheoryMethod::tilt, TheoryMethod::greedy, TheoryMethod::exact}) {
          const auto p = predict_terminal(m, 0.2, s, 1.1, lambda);
          CHECK(p.variance > 0.0);
          CHECK(p.expected_reward <= 0.0);
          CHECK(p.expected_reward == doctest::Approx(-(p.variance + (p.mean - 1.1) * (p.mean - 1.1))));
        }
  }

  TEST_CASE("closed-form greedy control equals the scaled guidance signal") {
    const double mu = 0.3, s = 1.7, a = 1.2, lambda = 0.8;
    const AnalyticGaussianFlowMap m(GaussianTarget(scalar(mu), s));
    const QuadraticReward r(scalar(a));
    for (double t : {0.0, 0.25, 0.6, 0.95})
      for (double x : {-1.5, 0.0, 0.9}) {
        const double sig = greedy_guidance_signal(m, r, t, scalar(x), GradientVariant::jacobian)[0];
        CHECK(std::abs(greedy_control_closed_form(mu, s, a, lambda, t, x) - lambda * sig) <= 1e-10);
      }
    // On the reference trajectory x_t^M = t mu + (a - mu) / M_t.
    const double t = 0.4, mt = s / std::sqrt(fmrg::test::gauss_C(s, t));
    CHECK(std::abs(greedy_control_closed_form(mu, s, a, lambda, t, t * mu + (a - mu) / mt)) <= 1e-15);
    CHECK(greedy_control_closed_form(mu, s, a, lambda, 1.0, 0.5) == doctest::Approx(-2 * lambda * (0.5 - a)));
    CHECK(greedy_control_closed_form(mu, s, a, 0.0, 0.4, 0.5) == 0.0);
  }

  TEST_CASE("early-stop variance") {
    for (double s : {0.5, 1.0, 2.0})
      for (double lambda : {0.1, 0.75, 2.0}) {
        const double full = predict_terminal(TheoryMethod::greedy, 0.0, s, 0.0, lambda).variance;
        CHECK(early_stop_variance(s, lambda, 1.0) == doctest::Approx(full).epsilon(1e-14));
        CHECK(early_stop_variance(s, lambda, 1e-12) == doctest::Approx(s * s).epsilon(1e-9));
      }
    CHECK(early_stop_variance(1.0, 0.5, 0.5) == doctest::Approx(std::exp(-kPi / 2)).epsilon(1e-14));
    CHECK(std::exp(-kPi / 2) == doctest::Approx(0.20788).epsilon(1e-4));
  }

  TEST_CASE("early-stop prediction at full horizon is greedy") {
    const auto p = predict_early_stop(0.2, 0.9, 1.4, 0.6, 1.0);
    const auto g = predict_terminal(TheoryMethod::greedy, 0.2, 0.9, 1.4, 0.6);
    CHECK(p.mean == doctest::Approx(g.mean).epsilon(1e-14));
    CHECK(p.variance == doctest::Approx(g.variance).epsilon(1e-14));
  }

  TEST_CASE("solved stopping time") {
    CHECK(solve_t_stop(1.0, 1e-6) > 0.999);
    for (double s : {0.5, 1.0, 2.0}) {
      double prev = 1.0;
      for (double lambda : {0.001, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0}) {
        const double ts = solve_t_stop(s, lambda);
        CHECK(ts > 0.0);
        CHECK(ts <= 1.0);
        CHECK(ts < prev);
        prev = ts;
        const double exact = predict_terminal(TheoryMethod::exact, 0.0, s, 0.0, lambda).variance;
        CHECK(std::abs(early_stop_variance(s, lambda, ts) - exact) <= 1e-10);
      }
    }
    // t_stop ~ theta / sigma ~ log(lambda) / (2 lambda sigma^2).
    for (double lambda : {1e3, 1e4}) {
      const double ratio = solve_t_stop(1.0, lambda) * lambda / std::log(lambda);
      CHECK(std::abs(ratio / 0.5 - 1.0) <= 0.2);
    }
    for (double s : {0.5, 1.0, 2.0})
      for (double lambda : {1e3, 1e4}) {
        const double theta = std::log(1 + kPi * lambda * s) / (2 * lambda * s);
        CHECK(solve_t_stop(s, lambda) == doctest::Approx(theta / s).epsilon(0.01));
      }
  }

  TEST_CASE("variance ordering on a grid") {
    for (double s : {0.5, 1.0, 2.0})
      for (double lambda : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        const double g = std::exp(log_var(TheoryMethod::greedy, s, lambda));
        const double e = std::exp(log_var(TheoryMethod::exact, s, lambda));
        const double t = std::exp(log_var(TheoryMethod::tilt, s, lambda));
        CHECK(g < e);
        CHECK(e < t);
      }
  }

  TEST_CASE("asymptotic variance rates") {
    for (double s : {0.5, 1.0, 2.0}) {
      const double l1 = 1e3, l2 = 1e4;
      auto slope = [&](TheoryMethod m) { return (log_var(m, s, l2) - log_var(m, s, l1)) / std::log(l2 / l1); };
      CHECK(slope(TheoryMethod::tilt) == doctest::Approx(-1.0).epsilon(1e-2));
      CHECK(slope(TheoryMethod::exact) == doctest::Approx(-2.0).epsilon(1e-2));
      // Greedy log-variance is linear in lambda with slope -2 pi sigma.
      const double d = (log_var(TheoryMethod::greedy, s, 20.0) - log_var(TheoryMethod::greedy, s, 10.0)) / 10.0;
      CHECK(d == doctest::Approx(-2 * kPi * s).epsilon(1e-12));
    }
  }

  TEST_CASE("greedy attains the highest expected reward at large lambda") {
    for (double s : {0.5, 1.0, 2.0})
      for (double mu : {0.0, 0.7})
        for (double lambda : {1.0, 2.0, 5.0, 10.0, 100.0}) {
          const double g = predict_terminal(TheoryMethod::greedy, mu, s, 1.5, lambda).expected_reward;
          const double e = predict_terminal(TheoryMethod::exact, mu, s, 1.5, lambda).expected_reward;
          const double t = predict_terminal(TheoryMethod::tilt, mu, s, 1.5, lambda).expected_reward;
          CHECK(g > e);
          CHECK(e > t);
        }
  }
}
