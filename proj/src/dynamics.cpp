#include "hnnmc/dynamics.hpp"

namespace hnnmc {

GradientProvider exact_gradient_provider(const HamiltonianSystem& sys,
                                         std::shared_ptr<std::atomic<long long>> counter) {
  GradientProvider gp;
  gp.kind = GradientKind::exact;
  const double inv_alpha = 1.0 / sys.mass_scalar;
  auto grad = sys.target.grad_log_density;
  gp.eval = [grad, inv_alpha, counter](const PhaseState& s) -> PhaseDerivatives {
    if (counter) counter->fetch_add(1, std::memory_order_relaxed);
    return {s.p * inv_alpha, grad(s.q)};
  };
  return gp;
}

double hamiltonian(const HamiltonianSystem& sys, const PhaseState& s) {
  if (s.q.size() != s.p.size() || s.q.size() != sys.target.dim)
    throw InvalidArgument("hamiltonian: phase-state dimension mismatch");
  return -sys.target.log_density(s.q) + 0.5 * s.p.squaredNorm() / sys.mass_scalar;
}

PhaseState leapfrog_step_with_force(const HamiltonianSystem& sys, const PhaseState& s, double dt,
                                    const GradientProvider& gp, Vec& force_inout) {
  const double alpha = sys.mass_scalar;
  PhaseState next;
  next.q = s.q + (dt / alpha) * s.p + (dt * dt / (2.0 * alpha)) * force_inout;
  // Force at t+dt; the provider sees the half-updated momentum as its best
  // estimate of p(t+dt) (only phase-state-dependent providers use it).
  Vec p_half = s.p + (0.5 * dt) * force_inout;
  PhaseDerivatives d1 = gp.eval({next.q, p_half});
  if (!all_finite(d1.dp_dt))
    throw IntegrationFailure("leapfrog: non-finite gradient", next.q, p_half);
  next.p = s.p + (0.5 * dt) * (force_inout + d1.dp_dt);
  force_inout = std::move(d1.dp_dt);
  return next;
}

PhaseState leapfrog_step(const HamiltonianSystem& sys, const PhaseState& s, double dt,
                         const GradientProvider& gp) {
  if (!(dt > 0.0)) throw InvalidArgument("leapfrog_step: dt must be positive");
  if (s.q.size() != s.p.size()) throw InvalidArgument("leapfrog_step: |q| != |p|");
  PhaseDerivatives d0 = gp.eval(s);
  if (!all_finite(d0.dp_dt))
    throw IntegrationFailure("leapfrog: non-finite gradient", s.q, s.p);
  Vec force = std::move(d0.dp_dt);
  return leapfrog_step_with_force(sys, s, dt, gp, force);
}

Trajectory integrate_trajectory(const HamiltonianSystem& sys, const PhaseState& s0, int L,
                                double dt, const GradientProvider& gp, bool store_states) {
  if (L < 1) throw InvalidArgument("integrate_trajectory: L must be >= 1");
  Trajectory traj;
  traj.dt = dt;
  PhaseState cur = s0;
  if (store_states) {
    traj.states.reserve(L + 1);
    traj.states.push_back(cur);
    traj.hamiltonians.push_back(hamiltonian(sys, cur));
  }
  PhaseDerivatives d0 = gp.eval(cur);
  if (!all_finite(d0.dp_dt))
    throw IntegrationFailure("leapfrog: non-finite gradient", cur.q, cur.p);
  Vec force = std::move(d0.dp_dt);
  for (int step = 0; step < L; ++step) {
    cur = leapfrog_step_with_force(sys, cur, dt, gp, force);
    if (store_states) {
      traj.states.push_back(cur);
      traj.hamiltonians.push_back(hamiltonian(sys, cur));
    }
  }
  cur.p = -cur.p;
  if (store_states) {
    traj.states.back() = cur;  // proposal endpoint carries the negated momentum
  } else {
    traj.states.push_back(cur);
    traj.hamiltonians.push_back(hamiltonian(sys, cur));
  }
  return traj;
}

}  // namespace hnnmc
