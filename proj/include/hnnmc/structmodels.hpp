#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <vector>

#include "hnnmc/targets.hpp"

namespace hnnmc {

/// Bad-parameter trajectory blow-up in a forward model; mapped to -inf
/// log-likelihood downstream.
struct DivergedModel : ModelDomainError {
  using ModelDomainError::ModelDomainError;
};

// ---------------------------------------------------------------------------
// Primary-secondary spring-damper oscillator

struct SpringDamperParams {
  double m_p, m_s;        // masses [kg]
  double k_p, k_s;        // stiffnesses [N/m]
  double zeta_p, zeta_s;  // damping ratios
  double F_s;             // spring capacity [N]
  double S_0;             // excitation intensity [N]
};

/// Mean values and coefficients of variation of the eight lognormal
/// parameters, in the field order of SpringDamperParams.
SpringDamperParams spring_damper_means();
std::array<double, 8> spring_damper_cvs();

/// Highly nonlinear capacity-minus-demand limit state of the secondary
/// oscillator. Throws ModelDomainError on a non-positive radicand.
double spring_damper_limit_state(const SpringDamperParams& p);

/// Target over the eight parameters expressed in mean-scaled units
/// (y_i = x_i / mean_i), which keeps the lognormal form and conditions the
/// phase-space dynamics; the scaling is recorded in the returned pair.
TargetDistribution make_spring_damper_target();
LimitState make_spring_damper_limit_state_scaled();

// ---------------------------------------------------------------------------
// White-noise-excited linear SDOF (200 random variables)

struct WhiteNoiseSpec {
  int n = 200;                       // random variables (n/2 frequency points)
  double S = 0.01;                   // white-noise intensity [m^2/s^3]
  double omega_cut = 15.0 * M_PI;    // cut-off frequency [rad/s]
  double d_omega = 0.15 * M_PI;      // frequency spacing [rad/s]
  double amplitude() const { return std::sqrt(2.0 * S * d_omega); }
  double duration = 10.0;            // [s]
  double dt_response = 0.005;        // response-integration step [s]

  // fixed oscillator properties
  double mass = 6.0e4;               // [kg]
  double stiffness = 2.0e7;          // [N/m]
  double zeta = 0.1;
  double damping() const { return 2.0 * mass * zeta * std::sqrt(stiffness / mass); }
};

/// Ground acceleration at time t from the spectral representation.
double synthesize_white_noise(const Vec& x, const WhiteNoiseSpec& spec, double t);

/// Precomputed trig table over the response grid; one matrix-vector product
/// yields the whole excitation series. Immutable, shared across threads.
class WhiteNoiseSynthesizer {
 public:
  explicit WhiteNoiseSynthesizer(const WhiteNoiseSpec& spec);
  const WhiteNoiseSpec& spec() const { return spec_; }
  int grid_size() const { return static_cast<int>(trig_.rows()); }
  Vec excitation_series(const Vec& x) const;  // length grid_size()

 private:
  WhiteNoiseSpec spec_;
  Mat trig_;
};

/// Signed maximum displacement of the SDOF over [0, duration], implicit
/// average-acceleration time stepping from rest.
double sdof_response(const Vec& x, const WhiteNoiseSynthesizer& synth);

/// g(x) = u_lim - max_t u(x, t).
LimitState make_white_noise_limit_state(std::shared_ptr<const WhiteNoiseSynthesizer> synth,
                                        double u_lim);

// ---------------------------------------------------------------------------
// Bouc-Wen hysteretic SDOF and its Bayesian inference problem

struct BoucWenParams {
  double k = 1.0;      // stiffness [N/m]
  double r0 = 0.025;   // yield displacement scale [m]
  double delta = 1.0;  // beta/(beta+gamma)
  double n = 2.0;      // hysteresis exponent

  double beta() const { return delta / std::pow(r0, n); }
  double gamma() const { return (1.0 - delta) / std::pow(r0, n); }
};

/// Round-trip (beta, gamma) -> (r0, delta) of the equivalent parameterization.
BoucWenParams bouc_wen_from_beta_gamma(double k, double beta, double gamma, double n);

/// Co-integrates the displacement equation of motion and the hysteresis ODE
/// with fixed-step RK4 (sub-stepped) over the excitation grid. Throws
/// DivergedModel on a non-finite or unbounded state.
std::vector<double> bouc_wen_response(const BoucWenParams& theta,
                                      const std::vector<double>& ground_accel, double dt,
                                      double mass, double damping, int substeps = 4);

struct ObservedRecord {
  std::vector<double> t;       // strictly increasing uniform grid [s]
  std::vector<double> ag;      // ground acceleration [m/s^2]
  std::vector<double> u_obs;   // noisy displacement [m]
  double noise_rms_fraction = 0.05;
  double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

/// Band-limited synthetic ground motion (sum of random-phase sinusoids under
/// a build-up/decay envelope); stands in for a recorded accelerogram.
std::vector<double> synthetic_ground_motion(int n_points, double dt, double w_lo, double w_hi,
                                            int n_components, double amplitude,
                                            std::uint64_t seed);

/// Simulates the true system (with optional small viscous damping) and adds
/// noise_rms_fraction * rms(u) Gaussian noise.
ObservedRecord make_observed_record(const BoucWenParams& truth, const std::vector<double>& t,
                                    const std::vector<double>& ag, double mass,
                                    double damping_true, double noise_rms_fraction,
                                    std::uint64_t noise_seed);

void save_record(const ObservedRecord& rec, const std::string& path);
ObservedRecord load_record(const std::string& path);

/// Two-column (time, acceleration) text file with '#' comments.
void save_ground_motion(const std::vector<double>& t, const std::vector<double>& ag,
                        const std::string& path);
std::pair<std::vector<double>, std::vector<double>> load_ground_motion(const std::string& path);

/// Independent lognormal priors on (k, r0, delta, n).
struct BoucWenPrior {
  Vec log_median;  // ln of the prior medians
  Vec log_sigma;   // lognormal sigmas
  double log_density(const Vec& theta_phys) const;
  Vec grad_log_density(const Vec& theta_phys) const;
};
BoucWenPrior default_boucwen_prior();

/// Gaussian log-likelihood of the observed displacements given the model
/// response; one full model run per evaluation. Diverged model -> -inf.
double posterior_log_density(const BoucWenParams& theta, const ObservedRecord& record,
                             const BoucWenPrior& prior, double mass, double sigma_noise);

/// Central-difference gradient (2 * dim model runs); any diverged stencil
/// point invalidates the gradient (returns non-finite entries).
Vec posterior_grad_central_difference(const BoucWenParams& theta, const ObservedRecord& record,
                                      const BoucWenPrior& prior, double mass, double sigma_noise,
                                      const Vec& h);

/// The assembled inference-plus-reliability problem over scaled parameters
/// y = theta / scale. Per-thread memoization guarantees that the Hamiltonian
/// accept/reject and the limit-state check of one conditional proposal share
/// a single model run.
class BoucWenProblem {
 public:
  BoucWenProblem(ObservedRecord record, double mass, BoucWenPrior prior, Vec scale,
                 double u_lim);

  const ObservedRecord& record() const { return record_; }
  double mass() const { return mass_; }
  double sigma_noise() const { return sigma_noise_; }
  const Vec& scale() const { return scale_; }
  double u_lim() const { return u_lim_; }
  std::shared_ptr<std::atomic<long long>> run_counter() const { return runs_; }

  BoucWenParams params_from_scaled(const Vec& y) const;

  /// Posterior over scaled parameters; gradient by central differences.
  TargetDistribution posterior_target(double fd_step = 1e-4) const;
  /// g(y) = u_lim - max |u|; shares the memoized response with the posterior.
  LimitState reliability_limit_state() const;

  struct Eval {
    Vec y;
    double loglike = 0.0;
    double max_abs_u = 0.0;
    bool diverged = false;
    long stamp = -1;
  };
  const Eval& evaluate(const Vec& y) const;   // memoized (two slots per thread)
  double log_density_uncached(const Vec& y) const;  // stencil path, no memo

 private:
  ObservedRecord record_;
  double mass_;
  BoucWenPrior prior_;
  Vec scale_;
  double u_lim_;
  double sigma_noise_;
  std::shared_ptr<std::atomic<long long>> runs_;
  mutable std::vector<std::array<Eval, 2>> memo_;
  mutable std::vector<long> stamp_;
};

}  // namespace hnnmc
