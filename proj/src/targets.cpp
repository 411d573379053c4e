#include "hnnmc/targets.hpp"

#include <memory>
#include <utility>

namespace hnnmc {

double TargetDistribution::log_density_checked(const Vec& q) const {
  if (q.size() != dim)
    throw InvalidArgument("log_density: expected dim " + std::to_string(dim) +
                          ", got " + std::to_string(q.size()));
  return log_density(q);
}

Vec TargetDistribution::grad_checked(const Vec& q) const {
  if (q.size() != dim)
    throw InvalidArgument("grad: expected dim " + std::to_string(dim) + ", got " +
                          std::to_string(q.size()));
  return grad_log_density(q);
}

CorrelatedGaussianSpec make_correlated_gaussian_spec(int n, double rho) {
  if (n < 1) throw InvalidArgument("correlated gaussian: n must be >= 1");
  if (rho < 0.0 || rho >= 1.0)
    throw InvalidArgument("correlated gaussian: rho must lie in [0, 1)");
  Mat C = Mat::Constant(n, n, rho);
  C.diagonal().setOnes();
  Eigen::LLT<Mat> llt(C);
  if (llt.info() != Eigen::Success)
    throw InvalidArgument("correlated gaussian: covariance not positive definite");
  CorrelatedGaussianSpec spec;
  spec.n = n;
  spec.rho = rho;
  spec.mu = Vec::Zero(n);
  spec.chol = llt.matrixL();
  return spec;
}

TargetDistribution make_correlated_gaussian(int n, double rho) {
  auto spec = std::make_shared<CorrelatedGaussianSpec>(make_correlated_gaussian_spec(n, rho));
  TargetDistribution t;
  t.dim = n;
  t.label = "gaussian_n" + std::to_string(n) + "_rho" + std::to_string(rho);
  t.log_density = [spec](const Vec& q) {
    // -1/2 q^T C^{-1} q via two triangular solves
    Vec y = spec->chol.triangularView<Eigen::Lower>().solve(q);
    return -0.5 * y.squaredNorm();
  };
  t.grad_log_density = [spec](const Vec& q) -> Vec {
    Vec y = spec->chol.triangularView<Eigen::Lower>().solve(q);
    spec->chol.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
    return -y;
  };
  t.initial_sampler = [spec, n](Rng& rng) -> Vec {
    return spec->chol.triangularView<Eigen::Lower>() * rng.normal_vector(n);
  };
  t.initial_is_exact = true;
  t.marginal_log_density = [](int, double xi) { return -0.5 * xi * xi; };
  return t;
}

TargetDistribution make_rosenbrock(double k) {
  if (!(k > 0.0)) throw InvalidArgument("rosenbrock: k must be positive");
  RosenbrockSpec spec{k};
  TargetDistribution t;
  t.dim = 2;
  t.label = "rosenbrock_k" + std::to_string(k);
  t.log_density = [spec](const Vec& x) { return -spec.potential(x); };
  t.grad_log_density = [k](const Vec& x) -> Vec {
    Vec g(2);
    double d = x[1] - x[0] * x[0];
    g[0] = -(-4.0 * k * x[0] * d - 2.0 * (1.0 - x[0])) / 20.0;
    g[1] = -(2.0 * k * d) / 20.0;
    return g;
  };
  t.initial_sampler = [k](Rng& rng) -> Vec {
    Vec x(2);
    x[0] = 1.0 + std::sqrt(10.0) * rng.normal();
    x[1] = x[0] * x[0] + std::sqrt(10.0 / k) * rng.normal();
    return x;
  };
  t.initial_is_exact = true;
  return t;
}

TargetDistribution make_gaussian_mixture_1d(double mu1, double mu2, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian mixture: sigma must be positive");
  TargetDistribution t;
  t.dim = 1;
  t.label = "bimodal";
  const double w1 = 0.25, w2 = 0.75;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  t.log_density = [=](const Vec& qv) {
    double q = qv[0];
    double e1 = -(q - mu1) * (q - mu1) * inv2s2;
    double e2 = -(q - mu2) * (q - mu2) * inv2s2;
    double m = std::max(e1, e2);
    return m + std::log(w1 * std::exp(e1 - m) + w2 * std::exp(e2 - m));
  };
  t.grad_log_density = [=](const Vec& qv) -> Vec {
    double q = qv[0];
    double e1 = -(q - mu1) * (q - mu1) * inv2s2;
    double e2 = -(q - mu2) * (q - mu2) * inv2s2;
    double m = std::max(e1, e2);
    double p1 = w1 * std::exp(e1 - m), p2 = w2 * std::exp(e2 - m);
    double g1 = -(q - mu1) / (sigma * sigma), g2 = -(q - mu2) / (sigma * sigma);
    Vec g(1);
    g[0] = (p1 * g1 + p2 * g2) / (p1 + p2);
    return g;
  };
  t.initial_sampler = [=](Rng& rng) -> Vec {
    Vec q(1);
    double mu = rng.uniform() < w1 ? mu1 : mu2;
    q[0] = mu + sigma * rng.normal();
    return q;
  };
  t.initial_is_exact = true;
  return t;
}

LimitState make_linear_limit_state(double beta, int n, double sigma_max) {
  if (n < 1) throw InvalidArgument("linear limit state: n must be >= 1");
  if (!(sigma_max > 0.0)) throw InvalidArgument("linear limit state: sigma_max must be positive");
  LimitState ls;
  ls.label = "linear_beta" + std::to_string(beta);
  ls.expected_dim = n;
  const double offset = beta * std::sqrt(sigma_max * n);
  ls.g_fn = [offset](const Vec& x) { return offset - x.sum(); };
  return ls;
}

double evaluate_limit_state(const LimitState& ls, const Vec& x) {
  if (ls.expected_dim > 0 && x.size() != ls.expected_dim)
    throw InvalidArgument("limit state '" + ls.label + "': expected dim " +
                          std::to_string(ls.expected_dim) + ", got " +
                          std::to_string(x.size()));
  return ls.g_fn(x);
}

TargetDistribution shift_target(TargetDistribution base, const Vec& shift) {
  if (shift.size() != base.dim) throw InvalidArgument("shift_target: dimension mismatch");
  TargetDistribution t = base;
  auto ld = base.log_density;
  auto gd = base.grad_log_density;
  auto is = base.initial_sampler;
  t.label = base.label + "_shifted";
  t.log_density = [ld, shift](const Vec& q) { return ld(q - shift); };
  t.grad_log_density = [gd, shift](const Vec& q) -> Vec { return gd(q - shift); };
  if (is) t.initial_sampler = [is, shift](Rng& rng) -> Vec { return is(rng) + shift; };
  if (base.marginal_log_density) {
    auto md = base.marginal_log_density;
    t.marginal_log_density = [md, shift](int i, double xi) { return md(i, xi - shift[i]); };
  }
  return t;
}

}  // namespace hnnmc
