// Benchmarks the OpenMP kernels against their serial reference paths and the
// learned-gradient prediction against the exact-gradient routes.

#include <omp.h>

#include <chrono>
#include <cstdio>

#include "hnnmc/subsetsim.hpp"

using namespace hnnmc;
using clk = std::chrono::steady_clock;

namespace {

double ms_since(clk::time_point t0) {
  return std::chrono::duration<double, std::milli>(clk::now() - t0).count();
}

HnnModel quick_train_gaussian(int n, int hidden_layers, int hidden_units, int pairs, int epochs) {
  TargetDistribution target = make_correlated_gaussian(n, 0.0);
  HamiltonianSystem sys{target, 1.0};
  Rng rng(42);
  int L = 49;
  int starts = std::max(1, pairs / (L + 1));
  TrainingDataset data = generate_training_data(sys, starts, L, 0.1, rng);
  Rng mrng(7);
  HnnModel model = make_hnn_model(2 * n, n, hidden_layers, hidden_units, Activation::Tanh, mrng);
  TrainConfig tc;
  tc.epochs = epochs;
  tc.rng_seed = 3;
  train(model, data, tc);
  return model;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = 100;
  const int n_eval = argc > 1 ? std::atoi(argv[1]) : 1000;
  std::printf("threads: %d\n", omp_get_max_threads());

  TargetDistribution target = make_correlated_gaussian(n, 0.5);
  HamiltonianSystem sys{target, 1.0};
  Rng rng(1);
  Mat X(2 * n, n_eval);
  for (int j = 0; j < n_eval; ++j) {
    X.col(j).head(n) = target.initial_sampler(rng);
    X.col(j).tail(n) = rng.normal_vector(n);
  }

  std::printf("-- batched network gradient prediction (%d-d target, %d states)\n", n, n_eval);
  HnnModel model = quick_train_gaussian(n, 3, 100, 4000, 3);
  Mat G;
  predict_gradients_batch(model, X, G, false);  // warm up
  auto t0 = clk::now();
  predict_gradients_batch(model, X, G, false);
  double serial_ms = ms_since(t0);
  t0 = clk::now();
  predict_gradients_batch(model, X, G, true);
  double parallel_ms = ms_since(t0);
  std::printf("   serial    %8.2f ms\n   openmp    %8.2f ms   speedup %.2fx\n", serial_ms,
              parallel_ms, serial_ms / parallel_ms);

  std::printf("-- exact gradient routes, %d evaluations\n", n_eval);
  GradientProvider exact = exact_gradient_provider(sys);
  volatile double sink = 0.0;
  t0 = clk::now();
  for (int j = 0; j < n_eval; ++j) {
    PhaseDerivatives d = exact.eval({X.col(j).head(n), X.col(j).tail(n)});
    sink = sink + d.dp_dt[0];
  }
  double exact_ms = ms_since(t0);
  std::printf("   analytic (cached Cholesky solve) %8.2f ms\n", exact_ms);

  auto logd = target.log_density;
  t0 = clk::now();
  const int fd_evals = std::max(1, n_eval / 50);
  for (int j = 0; j < fd_evals; ++j) {
    Vec q = X.col(j).head(n);
    Vec g(n);
    Vec qp = q;
    for (int i = 0; i < n; ++i) {
      qp[i] = q[i] + 1e-5;
      double f1 = logd(qp);
      qp[i] = q[i] - 1e-5;
      double f2 = logd(qp);
      qp[i] = q[i];
      g[i] = (f1 - f2) / 2e-5;
    }
    sink = sink + g[0];
  }
  double numeric_ms = ms_since(t0) * (static_cast<double>(n_eval) / fd_evals);
  std::printf("   numerical (central differences)  %8.2f ms (extrapolated)\n", numeric_ms);
  std::printf("   network batched                  %8.2f ms\n", parallel_ms);
  std::printf("   ratio numerical/network  %.1fx\n", numeric_ms / parallel_ms);
  std::printf("   ratio analytic/network   %.2fx\n", exact_ms / parallel_ms);

  std::printf("-- conditional-level chains, serial vs openmp (2-d Gaussian, N=2000)\n");
  TargetDistribution t2 = make_correlated_gaussian(2, 0.0);
  LimitState ls = make_linear_limit_state(3.0, 2, 1.0);
  SubsetConfig sc;
  sc.samples_per_level = 2000;
  sc.sampler_kind = SamplerKind::hmc;
  sc.sampler_cfg.hmc.dt = 0.1;
  sc.sampler_cfg.hmc.L = 15;
  sc.level0_burnin = 100;
  sc.parallel_chains = false;
  t0 = clk::now();
  ReliabilityResult r_serial = run_subset_simulation(t2, ls, sc, 99);
  double chain_serial = ms_since(t0);
  sc.parallel_chains = true;
  t0 = clk::now();
  ReliabilityResult r_par = run_subset_simulation(t2, ls, sc, 99);
  double chain_par = ms_since(t0);
  std::printf("   serial    %8.2f ms\n   openmp    %8.2f ms   speedup %.2fx\n", chain_serial,
              chain_par, chain_serial / chain_par);
  std::printf("   identical results: %s (pf %.3e vs %.3e)\n",
              r_serial.pf == r_par.pf ? "yes" : "NO", r_serial.pf, r_par.pf);
  (void)sink;
  return 0;
}
