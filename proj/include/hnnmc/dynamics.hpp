#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <vector>

#include "hnnmc/targets.hpp"

namespace hnnmc {

/// A point in phase space. q and p always have equal length.
struct PhaseState {
  Vec q, p;
};

/// H(q,p) = U(q) + K(p) with U = -log pi(q) and K = |p|^2 / (2 alpha),
/// i.e. mass matrix M = alpha * I.
struct HamiltonianSystem {
  TargetDistribution target;
  double mass_scalar = 1.0;
};

struct PhaseDerivatives {
  Vec dq_dt, dp_dt;
};

enum class GradientKind { exact, hnn, hybrid };

/// Source of phase-space time derivatives for the integrator. The leapfrog
/// consumes dp_dt (the force); dq_dt is reported for training and diagnostics.
struct GradientProvider {
  GradientKind kind = GradientKind::exact;
  std::function<PhaseDerivatives(const PhaseState&)> eval;
};

/// dq/dt = p/alpha, dp/dt = grad log pi(q). Increments *counter per call
/// when given.
GradientProvider exact_gradient_provider(const HamiltonianSystem& sys,
                                         std::shared_ptr<std::atomic<long long>> counter = nullptr);

double hamiltonian(const HamiltonianSystem& sys, const PhaseState& s);

/// One synchronized leapfrog step: the position update uses the force at t,
/// the momentum update averages the forces at t and t+dt.
/// Throws IntegrationFailure (carrying the offending state) on a non-finite
/// force.
PhaseState leapfrog_step(const HamiltonianSystem& sys, const PhaseState& s, double dt,
                         const GradientProvider& gp);

/// Same step map with the force at s supplied in force_inout (so chained
/// steps cost one provider call each); returns the force at the new state
/// through force_inout.
PhaseState leapfrog_step_with_force(const HamiltonianSystem& sys, const PhaseState& s, double dt,
                                    const GradientProvider& gp, Vec& force_inout);

struct Trajectory {
  std::vector<PhaseState> states;   // L+1 entries when stored
  double dt = 0.0;
  std::vector<double> hamiltonians;
};

/// Integrates L steps from s0 and negates the final momentum so the endpoint
/// is the Metropolis proposal. With store_states=false only the endpoint (and
/// its Hamiltonian) is kept.
Trajectory integrate_trajectory(const HamiltonianSystem& sys, const PhaseState& s0, int L,
                                double dt, const GradientProvider& gp, bool store_states = true);

}  // namespace hnnmc
