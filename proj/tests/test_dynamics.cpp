#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hnnmc/dynamics.hpp"
#include "oracle_helpers.hpp"

using namespace hnnmc;

namespace {

TargetDistribution standard_gaussian_1d() {
  TargetDistribution t;
  t.dim = 1;
  t.label = "std_normal";
  t.log_density = [](const Vec& q) { return -0.5 * q[0] * q[0]; };
  t.grad_log_density = [](const Vec& q) -> Vec { return -q; };
  t.initial_sampler = [](Rng& rng) -> Vec { return rng.normal_vector(1); };
  t.initial_is_exact = true;
  return t;
}

TargetDistribution flat_target(int d) {
  TargetDistribution t;
  t.dim = d;
  t.label = "flat";
  t.log_density = [](const Vec&) { return 0.0; };
  t.grad_log_density = [d](const Vec&) -> Vec { return Vec::Zero(d); };
  return t;
}

PhaseState state1(double q, double p) {
  PhaseState s;
  s.q = Vec::Constant(1, q);
  s.p = Vec::Constant(1, p);
  return s;
}

}  // namespace

TEST_CASE("hamiltonian: values and kinetic symmetry") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  CHECK(hamiltonian(sys, state1(0, 0)) == doctest::Approx(0.0));
  CHECK(hamiltonian(sys, state1(0, 2)) == doctest::Approx(2.0));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    PhaseState s{rng.normal_vector(1), rng.normal_vector(1)};
    PhaseState sm{s.q, -s.p};
    CHECK(hamiltonian(sys, s) == doctest::Approx(hamiltonian(sys, sm)));
  }
}

TEST_CASE("leapfrog step: hand-evaluated gaussian update") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  PhaseState next = leapfrog_step(sys, state1(1.0, 0.0), 0.1, gp);
  CHECK(next.q[0] == doctest::Approx(0.995).epsilon(1e-12));
  CHECK(next.p[0] == doctest::Approx(-0.09975).epsilon(1e-12));
}

TEST_CASE("leapfrog step: flat potential reduces to straight-line motion") {
  HamiltonianSystem sys{flat_target(3), 2.0};
  GradientProvider gp = exact_gradient_provider(sys);
  Rng rng(4);
  PhaseState s{rng.normal_vector(3), rng.normal_vector(3)};
  PhaseState next = leapfrog_step(sys, s, 0.3, gp);
  CHECK((next.q - (s.q + 0.3 * s.p / 2.0)).norm() == doctest::Approx(0.0));
  CHECK((next.p - s.p).norm() == doctest::Approx(0.0));
}

TEST_CASE("leapfrog step: reverse momentum and step back returns the start") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  PhaseState s0 = state1(0.7, -0.3);
  PhaseState s1 = leapfrog_step(sys, s0, 0.1, gp);
  s1.p = -s1.p;
  PhaseState s2 = leapfrog_step(sys, s1, 0.1, gp);
  CHECK(std::abs(s2.q[0] - s0.q[0]) < 1e-10);
  CHECK(std::abs(-s2.p[0] - s0.p[0]) < 1e-10);
}

TEST_CASE("trajectory: harmonic-oscillator energy conservation") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  Trajectory traj = integrate_trajectory(sys, state1(1.0, 0.0), 100, 0.01, gp);
  REQUIRE(traj.states.size() == 101);
  REQUIRE(traj.hamiltonians.size() == 101);
  CHECK(std::abs(traj.hamiltonians.back() - traj.hamiltonians.front()) <= 1e-4);
}

TEST_CASE("trajectory: L=1 equals one leapfrog step with negated momentum") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  PhaseState s0 = state1(0.4, 1.1);
  Trajectory traj = integrate_trajectory(sys, s0, 1, 0.05, gp);
  PhaseState one = leapfrog_step(sys, s0, 0.05, gp);
  CHECK(traj.states.back().q[0] == doctest::Approx(one.q[0]));
  CHECK(traj.states.back().p[0] == doctest::Approx(-one.p[0]));

  Trajectory lean = integrate_trajectory(sys, s0, 1, 0.05, gp, /*store_states=*/false);
  CHECK(lean.states.size() == 1);
  CHECK(lean.states.back().q[0] == doctest::Approx(traj.states.back().q[0]));
  CHECK(lean.states.back().p[0] == doctest::Approx(traj.states.back().p[0]));
}

TEST_CASE("trajectory reversibility over many steps") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  PhaseState s0 = state1(1.3, 0.4);
  Trajectory fwd = integrate_trajectory(sys, s0, 50, 0.05, gp);
  // endpoint already carries negated momentum; integrating again and negating
  // must recover the start
  Trajectory back = integrate_trajectory(sys, fwd.states.back(), 50, 0.05, gp);
  PhaseState end = back.states.back();
  end.p = -end.p;
  CHECK(std::abs(end.q[0] - s0.q[0]) < 1e-8);
  CHECK(std::abs(end.p[0] - s0.p[0]) < 1e-8);
}

TEST_CASE("one-step map has unit Jacobian determinant (finite differences)") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  const double dt = 0.2, h = 1e-6;
  auto step = [&](double q, double p) { return leapfrog_step(sys, state1(q, p), dt, gp); };
  const double q0 = 0.8, p0 = -0.5;
  PhaseState qp = step(q0 + h, p0), qm = step(q0 - h, p0);
  PhaseState pp = step(q0, p0 + h), pm = step(q0, p0 - h);
  const double dq_dq = (qp.q[0] - qm.q[0]) / (2 * h);
  const double dp_dq = (qp.p[0] - qm.p[0]) / (2 * h);
  const double dq_dp = (pp.q[0] - pm.q[0]) / (2 * h);
  const double dp_dp = (pp.p[0] - pm.p[0]) / (2 * h);
  const double det = dq_dq * dp_dp - dq_dp * dp_dq;
  CHECK(std::abs(det - 1.0) <= 1e-8);
}

TEST_CASE("energy error scales as dt^2: halving dt divides max drift by ~4") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  auto max_drift = [&](double dt) {
    const int L = static_cast<int>(std::lround(10.0 / dt));
    Trajectory t = integrate_trajectory(sys, state1(1.0, 0.5), L, dt, gp);
    double h0 = t.hamiltonians.front(), m = 0.0;
    for (double h : t.hamiltonians) m = std::max(m, std::abs(h - h0));
    return m;
  };
  const double r1 = max_drift(0.2) / max_drift(0.1);
  const double r2 = max_drift(0.1) / max_drift(0.05);
  CHECK(r1 >= 3.5);
  CHECK(r1 <= 4.5);
  CHECK(r2 >= 3.5);
  CHECK(r2 <= 4.5);
}

TEST_CASE("non-finite gradient raises an integration failure carrying the state") {
  TargetDistribution t = standard_gaussian_1d();
  t.grad_log_density = [](const Vec& q) -> Vec {
    Vec g(1);
    g[0] = std::abs(q[0]) > 1.5 ? std::numeric_limits<double>::quiet_NaN() : -q[0];
    return g;
  };
  HamiltonianSystem sys{t, 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  PhaseState s = state1(1.4, 3.0);  // next step lands beyond the cliff
  CHECK_THROWS_AS(integrate_trajectory(sys, s, 10, 0.5, gp), IntegrationFailure);
  try {
    integrate_trajectory(sys, s, 10, 0.5, gp);
  } catch (const IntegrationFailure& e) {
    CHECK(e.q.size() == 1);  // offending state travels with the error
  }
}

TEST_CASE("dimension and argument validation") {
  HamiltonianSystem sys{standard_gaussian_1d(), 1.0};
  GradientProvider gp = exact_gradient_provider(sys);
  PhaseState bad{Vec::Zero(2), Vec::Zero(1)};
  CHECK_THROWS_AS(hamiltonian(sys, bad), InvalidArgument);
  CHECK_THROWS_AS(leapfrog_step(sys, state1(0, 0), -0.1, gp), InvalidArgument);
  CHECK_THROWS_AS(integrate_trajectory(sys, state1(0, 0), 0, 0.1, gp), InvalidArgument);
}
