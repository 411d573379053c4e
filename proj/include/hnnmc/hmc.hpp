#pragma once

#include "hnnmc/dynamics.hpp"

namespace hnnmc {

struct HmcConfig {
  double dt = 0.1;
  int L = 10;
  double mass_scalar = 1.0;
  double a_low = 0.3;               // target acceptance band for adaptation
  double a_high = 0.5;
  double mean_period = 0.0;         // Tbar from init_trajectory_length
  double division_factor_k = 4.0;
};

/// Per-proposal bookkeeping shared by the exact and network-gradient samplers.
struct ProposalOutcome {
  Vec q;                             // new chain state (q0 on rejection)
  bool accepted = false;
  double h0 = 0.0, h_end = 0.0;      // exact Hamiltonians at start/proposal
  double log_density_end = 0.0;      // exact log-density at the trajectory endpoint
  bool integration_failed = false;
  int fallback_steps = 0;            // exact-gradient step redos (monitored runs)
};

/// Slice-variable error monitor wired into the proposal core; `fallback`
/// supplies the exact gradients used to redo a flagged step.
struct MonitorSpec {
  bool enabled = false;
  double threshold = 10.0;
  const GradientProvider* fallback = nullptr;
};

/// Slice-sampling error check: with u' ~ U(0,1) drawn once per proposal,
/// the current step falls back to exact gradients when
/// H_n - H_0 + ln(u') > threshold.
inline bool monitor_error(double h0, double hn, double log_u_slice, double threshold) {
  return hn - h0 + log_u_slice > threshold;
}

/// One Metropolis proposal: draw p ~ N(0, alpha I), integrate L leapfrog
/// steps with `gp`, negate the final momentum, accept with
/// min[1, exp(H0 - H*)] computed from the exact Hamiltonian.
/// `logd_q0` caches log pi(q0); pass NaN to have it computed.
ProposalOutcome propose_core(const HamiltonianSystem& sys, const Vec& q0, double logd_q0,
                             const HmcConfig& cfg, Rng& rng, const GradientProvider& gp,
                             const MonitorSpec& monitor = {});

/// Classical HMC proposal (Algorithm-1 structure) with exact gradients.
ProposalOutcome hmc_propose(const HamiltonianSystem& sys, const Vec& q0, const HmcConfig& cfg,
                            Rng& rng);

struct TrajectoryLengthInit {
  double mean_period = 0.0;  // Tbar
  int leapfrog_steps = 1;    // L = round(Tbar / k / dt)
  int capped_count = 0;      // starts that hit the step cap
};

/// Estimates the characteristic oscillation period by integrating forward and
/// backward from each sample until both U-turn dot products fail, recording
/// T_i = 2 j dt; returns Tbar and L = round(Tbar/k/dt).
TrajectoryLengthInit init_trajectory_length(const HamiltonianSystem& sys,
                                            const std::vector<PhaseState>& samples, double dt,
                                            double division_factor_k, const GradientProvider& gp,
                                            int step_cap = 10000);

struct TrajectoryLengthUpdate {
  double t_f = 0.0;
  int leapfrog_steps = 1;
};

/// Between-level adaptive rule: expand the trajectory when acceptance is at or
/// above a_high (using the a_low offset), contract when at or below a_low
/// (using the a_high offset), leave it alone inside the band. L' >= 1 always.
TrajectoryLengthUpdate adapt_trajectory_length(double t_f, double acceptance, double mean_period,
                                               const HmcConfig& cfg);

}  // namespace hnnmc
