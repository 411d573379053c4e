#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hnnmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when a caller violates an operation precondition (dimension
/// mismatches, invalid parameters). These are programming errors, not
/// sampling events.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when numerical integration produces a non-finite state.
struct IntegrationFailure : std::runtime_error {
  Vec q, p;
  IntegrationFailure(std::string msg, Vec q_, Vec p_)
      : std::runtime_error(std::move(msg)), q(std::move(q_)), p(std::move(p_)) {}
};

/// Thrown when a structural model leaves its valid domain.
struct ModelDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

// splitmix64; used only to derive stream seeds from a master seed.
inline std::uint64_t split_mix_64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic seed for stream `stream` of a run keyed by `master`.
/// Permuting evaluation order of streams never changes any stream's draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return split_mix_64(master ^ split_mix_64(stream + 0x51ed270053c8f3b7ULL));
}

/// Per-chain random generator. One instance per chain / trial; never shared
/// across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return unif_(gen_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(gen_); }
  double normal() { return norm_(gen_); }

  Vec normal_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = norm_(gen_);
    return v;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse standard normal CDF (Acklam's rational approximation refined by
/// one Halley step against erfc). Accurate to ~1e-15 over (0,1).
double normal_quantile(double p);

/// Reliability index for a failure probability: beta = -Phi^{-1}(pf).
inline double reliability_index(double pf) { return -normal_quantile(pf); }

}  // namespace hnnmc
