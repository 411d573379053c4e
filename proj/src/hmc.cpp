#include "hnnmc/hmc.hpp"

#include <cmath>

namespace hnnmc {

ProposalOutcome propose_core(const HamiltonianSystem& sys, const Vec& q0, double logd_q0,
                             const HmcConfig& cfg, Rng& rng, const GradientProvider& gp,
                             const MonitorSpec& monitor) {
  const int d = sys.target.dim;
  const double alpha = cfg.mass_scalar;
  HamiltonianSystem s = sys;
  s.mass_scalar = alpha;

  ProposalOutcome out;
  out.q = q0;

  Vec p0 = std::sqrt(alpha) * rng.normal_vector(d);
  double log_u_slice = monitor.enabled ? std::log(rng.uniform()) : 0.0;

  double logd0 = std::isnan(logd_q0) ? sys.target.log_density(q0) : logd_q0;
  double h0 = -logd0 + 0.5 * p0.squaredNorm() / alpha;
  out.h0 = h0;
  out.log_density_end = logd0;

  PhaseState cur{q0, p0};
  bool failed = false;
  try {
    PhaseDerivatives d0 = gp.eval(cur);
    if (!all_finite(d0.dp_dt))
      throw IntegrationFailure("leapfrog: non-finite gradient", cur.q, cur.p);
    Vec force = std::move(d0.dp_dt);
    for (int n = 0; n < cfg.L; ++n) {
      PhaseState prev = cur;
      Vec prev_force = force;
      cur = leapfrog_step_with_force(s, prev, cfg.dt, gp, force);
      if (monitor.enabled) {
        double hn = -sys.target.log_density(cur.q) + 0.5 * cur.p.squaredNorm() / alpha;
        if (monitor_error(h0, hn, log_u_slice, monitor.threshold)) {
          // Redo the current step with exact gradients.
          Vec exact_force = monitor.fallback->eval(prev).dp_dt;
          if (!all_finite(exact_force))
            throw IntegrationFailure("fallback: non-finite gradient", prev.q, prev.p);
          cur = leapfrog_step_with_force(s, prev, cfg.dt, *monitor.fallback, exact_force);
          out.fallback_steps++;
          if (n + 1 < cfg.L) {
            PhaseDerivatives dn = gp.eval(cur);
            if (!all_finite(dn.dp_dt))
              throw IntegrationFailure("leapfrog: non-finite gradient", cur.q, cur.p);
            force = std::move(dn.dp_dt);
          }
        }
      }
    }
  } catch (const IntegrationFailure&) {
    failed = true;
  }

  double u_accept = rng.uniform();
  if (failed) {
    out.integration_failed = true;
    out.accepted = false;
    out.h_end = std::numeric_limits<double>::infinity();
    return out;
  }

  cur.p = -cur.p;  // proposal momentum negation
  double logd_end = sys.target.log_density(cur.q);
  double h_end = -logd_end + 0.5 * cur.p.squaredNorm() / alpha;
  out.h_end = h_end;

  bool accept = std::isfinite(h_end) && std::min(1.0, std::exp(h0 - h_end)) >= u_accept;
  out.accepted = accept;
  if (accept) {
    out.q = cur.q;
    out.log_density_end = logd_end;
  }
  return out;
}

ProposalOutcome hmc_propose(const HamiltonianSystem& sys, const Vec& q0, const HmcConfig& cfg,
                            Rng& rng) {
  if (!all_finite(q0)) throw InvalidArgument("hmc_propose: q0 must be finite");
  HamiltonianSystem s = sys;
  s.mass_scalar = cfg.mass_scalar;
  GradientProvider gp = exact_gradient_provider(s);
  return propose_core(s, q0, std::numeric_limits<double>::quiet_NaN(), cfg, rng, gp);
}

TrajectoryLengthInit init_trajectory_length(const HamiltonianSystem& sys,
                                            const std::vector<PhaseState>& samples, double dt,
                                            double division_factor_k, const GradientProvider& gp,
                                            int step_cap) {
  if (samples.empty()) throw InvalidArgument("init_trajectory_length: no samples");
  if (!(division_factor_k > 0.0))
    throw InvalidArgument("init_trajectory_length: division factor must be positive");

  TrajectoryLengthInit out;
  double sum_T = 0.0;
  for (const PhaseState& s0 : samples) {
    PhaseState fwd = s0;
    PhaseState bwd{s0.q, -s0.p};
    int j = 1;
    try {
      Vec force_f = gp.eval(fwd).dp_dt;
      Vec force_b = gp.eval(bwd).dp_dt;
      fwd = leapfrog_step_with_force(sys, fwd, dt, gp, force_f);
      bwd = leapfrog_step_with_force(sys, bwd, dt, gp, force_b);
      while (fwd.p.dot(fwd.q - bwd.q) > 0.0 || bwd.p.dot(bwd.q - fwd.q) > 0.0) {
        if (j >= step_cap) {
          out.capped_count++;
          break;
        }
        ++j;
        fwd = leapfrog_step_with_force(sys, fwd, dt, gp, force_f);
        bwd = leapfrog_step_with_force(sys, bwd, dt, gp, force_b);
      }
    } catch (const IntegrationFailure&) {
      // Treat a blown-up trajectory as an immediate U-turn at the current j.
    }
    sum_T += 2.0 * j * dt;
  }
  out.mean_period = sum_T / static_cast<double>(samples.size());
  double t_f = out.mean_period / division_factor_k;
  out.leapfrog_steps = std::max(1, static_cast<int>(std::lround(t_f / dt)));
  return out;
}

TrajectoryLengthUpdate adapt_trajectory_length(double t_f, double acceptance, double mean_period,
                                               const HmcConfig& cfg) {
  if (!(mean_period > 0.0))
    throw InvalidArgument("adapt_trajectory_length: mean period must be positive");
  if (acceptance < 0.0 || acceptance > 1.0)
    throw InvalidArgument("adapt_trajectory_length: acceptance outside [0,1]");

  TrajectoryLengthUpdate upd;
  upd.t_f = t_f;
  if (acceptance > cfg.a_low && acceptance < cfg.a_high) {
    upd.leapfrog_steps = std::max(1, static_cast<int>(std::lround(t_f / cfg.dt)));
    return upd;
  }
  const double folded =
      (mean_period / (2.0 * M_PI)) * std::asin(std::sin(2.0 * M_PI * t_f / mean_period));
  const double bound = acceptance >= cfg.a_high ? cfg.a_low : cfg.a_high;
  double t_new = folded * std::exp((acceptance - bound) / 2.0);
  int L = static_cast<int>(std::lround(t_new / cfg.dt));
  if (!(t_new > 0.0) || L < 1) {  // degenerate: clamp to one step
    t_new = cfg.dt;
    L = 1;
  }
  upd.t_f = t_new;
  upd.leapfrog_steps = L;
  return upd;
}

}  // namespace hnnmc
