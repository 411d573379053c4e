#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hnnmc/targets.hpp"
#include "oracle_helpers.hpp"

using namespace hnnmc;
using hnnmc::testing::fd_gradient;
using hnnmc::testing::max_rel_err;

TEST_CASE("correlated gaussian: gradient at the mode is zero") {
  TargetDistribution t = make_correlated_gaussian(2, 0.0);
  Vec q = Vec::Zero(2);
  CHECK(t.grad_checked(q).norm() == doctest::Approx(0.0));
}

TEST_CASE("correlated gaussian: shifted bivariate density at its mean") {
  // unnormalized log-density is 0 at the mean, so multiplying the density by
  // the analytic constant 1/sqrt((2 pi)^2 det(Sigma)) with det = 1 - 0.81
  // recovers the normalized peak value
  TargetDistribution base = make_correlated_gaussian(2, 0.9);
  Vec mu(2);
  mu << 1.0, -1.0;
  TargetDistribution t = shift_target(base, mu);
  CHECK(t.log_density_checked(mu) == doctest::Approx(0.0));
  const double det_sigma = 1.0 - 0.81;
  const double peak = std::exp(t.log_density(mu)) /
                      std::sqrt(std::pow(2.0 * M_PI, 2) * det_sigma);
  const double expected = 1.0 / (2.0 * M_PI * std::sqrt(det_sigma));
  CHECK(peak == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("correlated gaussian: gradient equals dense-inverse oracle at e1") {
  const int n = 10;
  const double rho = 0.5;
  TargetDistribution t = make_correlated_gaussian(n, rho);
  Mat C = Mat::Constant(n, n, rho);
  C.diagonal().setOnes();
  Mat Cinv = C.fullPivLu().inverse();  // independent dense route
  Vec e1 = Vec::Zero(n);
  e1[0] = 1.0;
  Vec want = -Cinv * e1;
  Vec got = t.grad_checked(e1);
  CHECK((got - want).norm() < 1e-10);
}

TEST_CASE("correlated gaussian: parameter validation") {
  CHECK_THROWS_AS(make_correlated_gaussian(2, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_correlated_gaussian(2, -0.1), InvalidArgument);
  CHECK_THROWS_AS(make_correlated_gaussian(0, 0.5), InvalidArgument);
}

TEST_CASE("correlated gaussian: sample covariance of direct samples matches C") {
  const int n = 4;
  const double rho = 0.6;
  TargetDistribution t = make_correlated_gaussian(n, rho);
  Rng rng(2024);
  const int N = 100000;
  Mat sum2 = Mat::Zero(n, n);
  Vec sum = Vec::Zero(n);
  for (int i = 0; i < N; ++i) {
    Vec x = t.initial_sampler(rng);
    sum += x;
    sum2 += x * x.transpose();
  }
  Vec mean = sum / N;
  Mat cov = sum2 / N - mean * mean.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(std::abs(cov(i, j) - (i == j ? 1.0 : rho)) < 0.05);
}

TEST_CASE("rosenbrock: potential minimum and direct values") {
  TargetDistribution t1 = make_rosenbrock(1.0);
  Vec x(2);
  x << 1.0, 1.0;
  CHECK(t1.log_density_checked(x) == doctest::Approx(0.0));
  CHECK(t1.grad_checked(x).norm() == doctest::Approx(0.0));

  TargetDistribution t100 = make_rosenbrock(100.0);
  x << 0.0, 1.0;
  CHECK(-t100.log_density(x) == doctest::Approx(5.05));  // [100*1 + 1]/20

  CHECK_THROWS_AS(make_rosenbrock(0.0), InvalidArgument);
  CHECK_THROWS_AS(make_rosenbrock(-1.0), InvalidArgument);
}

TEST_CASE("rosenbrock: analytic gradient matches finite differences") {
  TargetDistribution t = make_rosenbrock(1.0);
  Vec x(2);
  x << 0.5, 0.2;
  Vec fd = fd_gradient(t.log_density, x, 1e-6);
  CHECK((t.grad_checked(x) - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gaussian mixture: weights, degenerate case, gradient") {
  TargetDistribution t = make_gaussian_mixture_1d(0.0, 3.0, 1.0);
  Vec q3(1), q0(1);
  q3 << 3.0;
  q0 << 0.0;
  CHECK(t.log_density(q3) > t.log_density(q0));  // 3/4 peak beats 1/4 peak

  TargetDistribution degen = make_gaussian_mixture_1d(0.0, 0.0, 1.0);
  CHECK(degen.grad_checked(q0)[0] == doctest::Approx(0.0));
  // equals a single standard gaussian up to its normalizing constant
  Vec q(1);
  q << 1.7;
  CHECK(degen.log_density(q) - degen.log_density(q0) == doctest::Approx(-0.5 * 1.7 * 1.7));

  q << 1.5;
  Vec fd = fd_gradient(t.log_density, q, 1e-6);
  CHECK(std::abs(t.grad_checked(q)[0] - fd[0]) < 1e-6);

  CHECK_THROWS_AS(make_gaussian_mixture_1d(0.0, 3.0, 0.0), InvalidArgument);
}

TEST_CASE("analytic gradients agree with finite differences at random points") {
  Rng rng(7);
  std::vector<TargetDistribution> targets;
  targets.push_back(make_correlated_gaussian(5, 0.7));
  targets.push_back(make_rosenbrock(10.0));
  targets.push_back(make_gaussian_mixture_1d(0.0, 3.0, 1.0));
  for (const auto& t : targets) {
    for (int trial = 0; trial < 100; ++trial) {
      Vec x = rng.normal_vector(t.dim);
      Vec fd = fd_gradient(t.log_density, x, 1e-5);
      CHECK(max_rel_err(t.grad_checked(x), fd) <= 1e-5);
    }
  }
}

TEST_CASE("linear limit state: mode value and validation") {
  LimitState ls = make_linear_limit_state(5.0, 2, 1.0);
  Vec x = Vec::Zero(2);
  CHECK(evaluate_limit_state(ls, x) == doctest::Approx(5.0 * std::sqrt(2.0)));
  CHECK_THROWS_AS(make_linear_limit_state(3.0, 0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_linear_limit_state(3.0, 2, 0.0), InvalidArgument);
  Vec bad = Vec::Zero(3);
  CHECK_THROWS_AS(evaluate_limit_state(ls, bad), InvalidArgument);
}

TEST_CASE("linear limit state: direct Monte Carlo agrees with the analytic pf") {
  // var(sum x_i) = n + n(n-1) rho = n sigma_max, so pf = Phi(-beta) exactly
  const int n = 10;
  const double rho = 0.75, beta = 3.0;
  const double sigma_max = 1.0 + (n - 1) * rho;
  TargetDistribution t = make_correlated_gaussian(n, rho);
  LimitState ls = make_linear_limit_state(beta, n, sigma_max);
  Rng rng(5);
  const long N = 1000000;
  long fails = 0;
  for (long i = 0; i < N; ++i)
    if (evaluate_limit_state(ls, t.initial_sampler(rng)) <= 0.0) fails++;
  const double pf_hat = static_cast<double>(fails) / N;
  const double pf = normal_cdf(-beta);
  const double se = std::sqrt(pf * (1.0 - pf) / N);
  CHECK(std::abs(pf_hat - pf) < 3.0 * se);
}

TEST_CASE("rosenbrock limit state values") {
  LimitState ls{[](const Vec& x) { return 120.0 - x[1] - 3.0 * x[0]; }, "rosenbrock_linear", 2};
  Vec x(2);
  x << 0.0, 120.0;
  CHECK(evaluate_limit_state(ls, x) == doctest::Approx(0.0));
  x << 0.0, 0.0;
  CHECK(evaluate_limit_state(ls, x) == doctest::Approx(120.0));
}

TEST_CASE("rosenbrock direct sampler is exact: tail probability oracle") {
  // x1 ~ N(1,10), x2|x1 ~ N(x1^2, 10/k) factorizes the density; the linear
  // limit state then has a sharp Monte Carlo reference near beta = 2.70
  TargetDistribution t = make_rosenbrock(1.0);
  LimitState ls{[](const Vec& x) { return 120.0 - x[1] - 3.0 * x[0]; }, "rosenbrock_linear", 2};
  Rng rng(9);
  const long N = 2000000;
  long fails = 0;
  for (long i = 0; i < N; ++i)
    if (ls.g_fn(t.initial_sampler(rng)) <= 0.0) fails++;
  const double pf_hat = static_cast<double>(fails) / N;
  CHECK(pf_hat > 2.8e-3);
  CHECK(pf_hat < 4.2e-3);  // reference pf is about 3.4e-3
}

TEST_CASE("shift_target translates density, gradient and marginals") {
  TargetDistribution base = make_correlated_gaussian(3, 0.4);
  Vec mu(3);
  mu << 1.0, -2.0, 0.5;
  TargetDistribution t = shift_target(base, mu);
  Rng rng(3);
  Vec x = rng.normal_vector(3);
  CHECK(t.log_density(x) == doctest::Approx(base.log_density(x - mu)));
  CHECK((t.grad_log_density(x) - base.grad_log_density(x - mu)).norm() == doctest::Approx(0.0));
  CHECK(t.marginal_log_density(1, 0.0) == doctest::Approx(base.marginal_log_density(1, 2.0)));
}
