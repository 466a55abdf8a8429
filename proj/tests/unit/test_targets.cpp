#include "helpers.hpp"

#include "fmrg/rewards.hpp"
#include "fmrg/targets.hpp"
#include "fmrg/velocity.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

using namespace fmrg;
using fmrg::test::mat;
using fmrg::test::scalar;
using fmrg::test::vec;

namespace {

double normal_pdf(double x, double m, double var) {
  return std::exp(-0.5 * (x - m) * (x - m) / var) / std::sqrt(2 * std::numbers::pi * var);
}

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

struct Mix1 {
  std::vector<double> w, m, v;
  double pdf(double x) const {
    double p = 0;
    for (std::size_t i = 0; i < w.size(); ++i) p += w[i] * normal_pdf(x, m[i], v[i]);
    return p;
  }
  GaussianMixtureTarget target() const {
    std::vector<GaussianComponent> c;
    for (std::size_t i = 0; i < w.size(); ++i) c.push_back({w[i], scalar(m[i]), Matrix::Constant(1, 1, v[i])});
    return GaussianMixtureTarget(c);
  }
};

// E[x1 - x0 | I_t = x] by quadrature over x1, with x0 = (x - t x1) / (1 - t).
double velocity_oracle(const Mix1& mix, double t, double x) {
  const double s = 1 - t;
  auto joint = [&](double x1) { return mix.pdf(x1) * normal_pdf(x, t * x1, s * s); };
  const double z = integrate(joint, -30, 30);
  const double num = integrate([&](double x1) { return (x1 - (x - t * x1) / s) * joint(x1); }, -30, 30);
  return num / z;
}

}  // namespace

TEST_SUITE("analytic_targets") {
  TEST_CASE("auxiliary coefficients") {
    for (double s : {0.3, 1.0, 2.5}) {
      const GaussianCoefficients c{s};
      CHECK(c.C(0) == 1.0);
      CHECK(c.C(1) == doctest::Approx(s * s).epsilon(1e-15));
      CHECK(c.M(1) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(c.M(0) == doctest::Approx(s).epsilon(1e-15));
      for (int k = 0; k <= 100; ++k) CHECK(c.C(k / 100.0) > 0);
      const double h = 1e-6;
      CHECK(c.Cdot(0.37) == doctest::Approx((c.C(0.37 + h) - c.C(0.37 - h)) / (2 * h)).epsilon(1e-8));
      for (double t : {0.0, 0.25, 0.8}) {
        const double q = integrate([&](double u) { return 1.0 / c.C(u); }, t, 1.0);
        CHECK(c.integral_inv_C(t) == doctest::Approx(q).epsilon(1e-12));
      }
      CHECK(c.integral_inv_C(1.0) == 0.0);
    }
    CHECK_THROWS_AS(GaussianTarget(scalar(0.0), 0.0), ConfigError);
    CHECK_THROWS_AS(GaussianTarget(scalar(0.0), -1.0), ConfigError);
  }

  TEST_CASE("gaussian velocity examples") {
    const GaussianVelocity unit(GaussianTarget(vec({0.7, -0.2}), 1.0));
    CHECK((unit.eval(0.5, vec({3.0, 9.0})) - vec({0.7, -0.2})).norm() < 1e-15);
    const GaussianVelocity g(GaussianTarget(vec({1.2, 0.4}), 1.7));
    CHECK((g.eval(1.0, vec({1.2, 0.4})) - vec({1.2, 0.4})).norm() < 1e-14);
    for (double t : {0.0, 0.3, 0.9}) CHECK((g.eval(t, t * vec({1.2, 0.4})) - vec({1.2, 0.4})).norm() < 1e-14);
    // Jacobian is the scalar gain Cdot / 2C.
    const GaussianCoefficients c{1.7};
    CHECK((g.jacobian(0.4, vec({0.0, 0.0})) - c.Cdot(0.4) / (2 * c.C(0.4)) * Matrix::Identity(2, 2)).norm() < 1e-15);
  }

  TEST_CASE("single-component mixture equals the gaussian velocity") {
    const GaussianMixtureTarget one({{1.0, vec({0.3, -0.8}), 2.25 * Matrix::Identity(2, 2)}});
    const GmmVelocity m(one);
    const GaussianVelocity g(GaussianTarget(vec({0.3, -0.8}), 1.5));
    CounterRng rng(1, 0);
    for (int i = 0; i < 40; ++i) {
      const double t = 0.01 + 0.98 * rng.uniform();
      const Vector x = 2 * rng.normal_vector(2);
      CHECK((m.eval(t, x) - g.eval(t, x)).norm() <= 1e-12);
      CHECK((m.jacobian(t, x) - g.jacobian(t, x)).norm() <= 1e-12);
    }
  }

  TEST_CASE("symmetric mixture has zero velocity at the origin") {
    const Matrix s = mat(2, 2, {0.4, 0.1, 0.1, 0.3});
    const GmmVelocity m(GaussianMixtureTarget({{0.5, vec({1.5, -0.5}), s}, {0.5, vec({-1.5, 0.5}), s}}));
    for (double t : {0.0, 0.2, 0.5, 0.8, 0.99, 1.0}) CHECK(m.eval(t, vec({0.0, 0.0})).norm() <= 1e-14);
  }

  TEST_CASE("mixture velocity matches the conditional expectation oracle") {
    const Mix1 mix{{0.3, 0.7}, {-1.0, 2.0}, {0.25, 0.64}};
    const GmmVelocity m(mix.target());
    CHECK(m.eval(0.5, scalar(0.3))[0] == doctest::Approx(velocity_oracle(mix, 0.5, 0.3)).epsilon(1e-10));
    for (double t : {0.05, 0.3, 0.7, 0.95})
      for (double x : {-2.0, -0.4, 0.3, 1.8, 3.0})
        CHECK(m.eval(t, scalar(x))[0] == doctest::Approx(velocity_oracle(mix, t, x)).epsilon(1e-9));
  }

  TEST_CASE("mixture velocity endpoint limits") {
    const Mix1 mix{{0.3, 0.7}, {-1.0, 2.0}, {0.25, 0.64}};
    const GmmVelocity m(mix.target());
    const double mean = 0.3 * -1.0 + 0.7 * 2.0;
    CHECK(m.eval(0.0, scalar(0.4))[0] == doctest::Approx(mean - 0.4));
    CHECK(m.eval(1e-9, scalar(0.4))[0] == doctest::Approx(mean - 0.4).epsilon(1e-6));
    CHECK(m.eval(1.0, scalar(0.4))[0] == doctest::Approx(0.4));
    CHECK(m.eval(1 - 1e-7, scalar(0.4))[0] == doctest::Approx(0.4).epsilon(1e-5));
  }

  TEST_CASE("mixture validation") {
    const Matrix i2 = Matrix::Identity(2, 2);
    CHECK_THROWS_AS(GaussianMixtureTarget({}), ConfigError);
    CHECK_THROWS_AS(GaussianMixtureTarget({{0.5, vec({0, 0}), i2}, {0.6, vec({1, 1}), i2}}), ConfigError);
    CHECK_THROWS_AS(GaussianMixtureTarget({{1.0, vec({0, 0}), mat(2, 2, {1, 0.5, 0.4, 1})}}), ConfigError);
    CHECK_THROWS_AS(GaussianMixtureTarget({{1.0, vec({0, 0}), mat(2, 2, {1, 2, 2, 1})}}), ConfigError);
    CHECK_THROWS_AS(GaussianMixtureTarget({{0.5, vec({0, 0}), i2}, {0.5, vec({1}), Matrix::Identity(1, 1)}}),
                    ConfigError);
    CHECK_THROWS_AS(GaussianMixtureTarget({{1.5, vec({0, 0}), i2}, {-0.5, vec({1, 1}), i2}}), ConfigError);
  }

  TEST_CASE("gaussian sampling law of large numbers") {
    const std::size_t n = 1000000;
    const auto xs = sample_target(GaussianTarget(scalar(0.0), 1.0), n, 77);
    double m = 0, q = 0;
    for (const auto& x : xs) m += x[0];
    m /= n;
    for (const auto& x : xs) q += (x[0] - m) * (x[0] - m);
    q /= n - 1;
    CHECK(std::abs(m) <= 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(q - 1.0) <= 0.01);
  }

  TEST_CASE("sampling is deterministic and respects zero weights") {
    const GaussianMixtureTarget t({{1.0, scalar(-5.0), Matrix::Constant(1, 1, 0.01)},
                                   {0.0, scalar(5.0), Matrix::Constant(1, 1, 0.01)}});
    const auto a = sample_target(t, 2000, 5);
    const auto b = sample_target(t, 2000, 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == b[i]);
      CHECK(a[i][0] < 0.0);
    }
    const auto c = sample_target(t, 10, 6);
    CHECK(c[0] != a[0]);
  }

  TEST_CASE("gaussian tilt closed form") {
    const GaussianTarget g(vec({0.2, -0.3}), 1.3);
    const auto same = tilt_closed_form_gaussian(g, vec({1.0, 1.0}), 0.0);
    CHECK(same.mu1 == g.mu1);
    CHECK(same.sigma1 == g.sigma1);
    const auto half = tilt_closed_form_gaussian(GaussianTarget(scalar(0.0), 1.0), scalar(2.0), 0.5);
    CHECK(half.sigma1 * half.sigma1 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(half.mu1[0] == doctest::Approx(1.0).epsilon(1e-15));
    const auto big = tilt_closed_form_gaussian(GaussianTarget(scalar(0.0), 1.0), scalar(2.0), 1e3);
    CHECK(std::abs(big.mu1[0] - 2.0) <= 1e-3);
    CHECK(big.sigma1 * big.sigma1 <= 1e-3);
    CHECK_THROWS_AS(tilt_closed_form_gaussian(g, vec({1.0, 1.0}), -0.1), ConfigError);
  }

  TEST_CASE("gaussian tilt density is proportional to the reward-weighted density") {
    const double mu = 0.4, s = 1.3, lambda = 0.8, a = -0.7;
    const auto tl = tilt_closed_form_gaussian(GaussianTarget(scalar(mu), s), scalar(a), lambda);
    const QuadraticReward r(scalar(a));
    auto logn = [](double x, double m, double sd) {
      return -0.5 * (x - m) * (x - m) / (sd * sd) - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
    };
    const double ref = logn(0, tl.mu1[0], tl.sigma1) - (lambda * r.value(scalar(0)) + logn(0, mu, s));
    for (int k = -40; k <= 40; ++k) {
      const double x = 0.1 * k;
      const double diff = logn(x, tl.mu1[0], tl.sigma1) - (lambda * r.value(scalar(x)) + logn(x, mu, s));
      CHECK(std::abs(diff - ref) <= 1e-10);
    }
  }

  TEST_CASE("mixture tilt closed form") {
    const Mix1 mix{{0.3, 0.7}, {-1.0, 2.0}, {0.25, 0.64}};
    const auto t = mix.target();
    const auto same = tilt_closed_form_gmm(t, scalar(0.5), 0.0);
    CHECK(same.components[1].mean == t.components[1].mean);

    const GaussianMixtureTarget one({{1.0, vec({0.3, -0.2}), 1.69 * Matrix::Identity(2, 2)}});
    const auto one_t = tilt_closed_form_gmm(one, vec({1.0, 0.5}), 0.6);
    const auto g_t = tilt_closed_form_gaussian(GaussianTarget(vec({0.3, -0.2}), 1.3), vec({1.0, 0.5}), 0.6);
    CHECK((one_t.components[0].mean - g_t.mu1).norm() <= 1e-14);
    CHECK((one_t.components[0].cov - g_t.sigma1 * g_t.sigma1 * Matrix::Identity(2, 2)).norm() <= 1e-14);

    // Quadrature moments of e^{lambda r} rho1.
    const double a = 0.5, lambda = 0.4;
    auto w = [&](double x) { return std::exp(-lambda * (x - a) * (x - a)) * mix.pdf(x); };
    const double z = integrate(w, -30, 30);
    const double m1 = integrate([&](double x) { return x * w(x); }, -30, 30) / z;
    const double m2 = integrate([&](double x) { return x * x * w(x); }, -30, 30) / z;
    const auto tm = tilt_closed_form_gmm(t, scalar(a), lambda);
    double mean = 0, second = 0;
    for (const auto& c : tm.components) {
      mean += c.weight * c.mean[0];
      second += c.weight * (c.cov(0, 0) + c.mean[0] * c.mean[0]);
    }
    CHECK(mean == doctest::Approx(m1).epsilon(1e-10));
    CHECK(second - mean * mean == doctest::Approx(m2 - m1 * m1).epsilon(1e-10));
  }

  TEST_CASE("gaussian pushforward reaches the target") {
    const std::size_t n = 100000;
    for (double s : {0.5, 1.0, 2.0}) {
      const double mu = 0.6;
      const GaussianVelocity g(GaussianTarget(scalar(mu), s));
      const auto x0 = sample_target(GaussianTarget(scalar(0.0), 1.0), n, 31);
      double m = 0, q = 0;
      std::vector<double> x1(n);
      for (std::size_t i = 0; i < n; ++i) {
        x1[i] = rk4_integrate(g, 0.0, 1.0, x0[i], 1000)[0];
        m += x1[i];
      }
      m /= n;
      for (double x : x1) q += (x - m) * (x - m);
      q /= n - 1;
      CHECK(std::abs(m - mu) <= 0.02);
      CHECK(std::abs(q / (s * s) - 1.0) <= 0.02);
    }
  }

  TEST_CASE("mixture pushforward recovers weights and modes") {
    const Mix1 mix{{0.35, 0.65}, {-3.0, 3.0}, {0.3, 0.5}};
    const GmmVelocity v(mix.target());
    const std::size_t n = 20000;
    const auto x0 = sample_target(GaussianTarget(scalar(0.0), 1.0), n, 32);
    std::size_t left = 0;
    double ml = 0, mr = 0;
    for (const auto& x : x0) {
      const double y = rk4_integrate(v, 0.0, 1.0, x, 200)[0];
      if (y < 0) {
        ++left;
        ml += y;
      } else {
        mr += y;
      }
    }
    CHECK(std::abs(double(left) / n - 0.35) <= 0.02);
    CHECK(std::abs(ml / left + 3.0) <= 0.05);
    CHECK(std::abs(mr / (n - left) - 3.0) <= 0.05);
  }

  TEST_CASE("degenerate target validation and covariance") {
    const Vector mu = vec({0.0, 0.0, 0.0});
    CHECK_THROWS_AS(DegenerateGaussianTarget(mu, mat(3, 1, {1, 1, 0}), 1.0), ConfigError);
    CHECK_THROWS_AS(DegenerateGaussianTarget(mu, mat(3, 1, {1, 0, 0}), 1e-4, 1e-3), ConfigError);
    CHECK_THROWS_AS(DegenerateGaussianTarget(mu, Matrix::Zero(3, 0), 1.0), ConfigError);
    const Matrix u = mat(3, 1, {1.0 / 3, 2.0 / 3, 2.0 / 3});
    const DegenerateGaussianTarget t(mu, u, 1.0, 1e-3);
    const Matrix cov = t.covariance();
    CHECK((cov * u - u).norm() <= 1e-12);
    const Vector perp = vec({2.0 / 3, -2.0 / 3, 1.0 / 3});
    CHECK((cov * perp - 1e-6 * perp).norm() <= 1e-15);
    CHECK(target_dim(Target{t}) == 3);
  }
}
