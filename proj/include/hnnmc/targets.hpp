#pragma once

#include <functional>
#include <string>

#include "hnnmc/common.hpp"

namespace hnnmc {

/// A target probability distribution known up to its normalizing constant.
/// Log-densities are stored unnormalized; only differences enter acceptance
/// ratios. Immutable after construction and safe to share across threads.
struct TargetDistribution {
  int dim = 0;
  std::string label;
  std::function<double(const Vec&)> log_density;
  std::function<Vec(const Vec&)> grad_log_density;

  /// Draws a chain start. Exact sample of the target iff `initial_is_exact`,
  /// otherwise a dispersed initializer that chains burn in from.
  std::function<Vec(Rng&)> initial_sampler;
  bool initial_is_exact = false;

  /// Per-component marginal log-density, where the marginals are known.
  /// Required by the component-wise Metropolis-Hastings baseline.
  std::function<double(int, double)> marginal_log_density;

  double log_density_checked(const Vec& q) const;
  Vec grad_checked(const Vec& q) const;
};

struct CorrelatedGaussianSpec {
  int n = 0;
  double rho = 0.0;
  Vec mu;                    // all zeros
  Mat chol;                  // lower-triangular factor of C
  double sigma_max() const { return 1.0 + (n - 1) * rho; }
};

struct RosenbrockSpec {
  double k = 1.0;
  double potential(const Vec& x) const {
    double d = x[1] - x[0] * x[0];
    double e = 1.0 - x[0];
    return (k * d * d + e * e) / 20.0;
  }
};

/// Failure is the event g(x) <= 0.
struct LimitState {
  std::function<double(const Vec&)> g_fn;
  std::string label;
  int expected_dim = 0;
};

/// Zero-mean Gaussian with unit variances and constant pairwise correlation.
/// C^{-1} q is computed by Cholesky solve against the stored factor.
TargetDistribution make_correlated_gaussian(int n, double rho);
CorrelatedGaussianSpec make_correlated_gaussian_spec(int n, double rho);

/// Two-dimensional density proportional to exp(-[k(x2-x1^2)^2+(1-x1)^2]/20).
/// Exact direct sampling is available: x1 ~ N(1,10), x2|x1 ~ N(x1^2, 10/k).
TargetDistribution make_rosenbrock(double k);

/// One-dimensional mixture (1/4) N(mu[0], sigma) + (3/4) N(mu[1], sigma).
TargetDistribution make_gaussian_mixture_1d(double mu1, double mu2, double sigma);

/// g(x) = beta * sqrt(sigma_max * n) - sum(x).
LimitState make_linear_limit_state(double beta, int n, double sigma_max);

double evaluate_limit_state(const LimitState& ls, const Vec& x);

/// Translates a target by `shift`: density of q is the base density of
/// q - shift. Used for the shifted-mean Gaussian demonstration case.
TargetDistribution shift_target(TargetDistribution base, const Vec& shift);

}  // namespace hnnmc
