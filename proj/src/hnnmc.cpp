#include "hnnmc/hnnmc.hpp"

#include <cstdio>

namespace hnnmc {

HnnmcProposal hnnmc_propose(const HamiltonianSystem& sys, const HnnModel& model, const Vec& q0,
                            const HnnmcConfig& cfg, Rng& rng, double logd_q0,
                            const GradientProvider* hnn_gp, const GradientProvider* fallback_gp) {
  if (model.input_dim != 2 * sys.target.dim)
    throw InvalidArgument("hnnmc_propose: model input dim does not match target");

  GradientProvider local_hnn;
  if (!hnn_gp) {
    local_hnn = hnn_gradient_provider(&model);
    hnn_gp = &local_hnn;
  }
  GradientProvider local_exact;
  MonitorSpec monitor;
  monitor.enabled = cfg.monitoring_enabled;
  monitor.threshold = cfg.error_threshold;
  if (monitor.enabled) {
    if (!fallback_gp) {
      local_exact = exact_gradient_provider(sys);
      fallback_gp = &local_exact;
    }
    monitor.fallback = fallback_gp;
  }

  ProposalOutcome out = propose_core(sys, q0, logd_q0, cfg.hmc, rng, *hnn_gp, monitor);

  HnnmcProposal prop;
  prop.q = std::move(out.q);
  prop.accepted = out.accepted;
  prop.log_density_end = out.log_density_end;
  prop.diagnostics.used_fallback_steps = out.fallback_steps;
  prop.diagnostics.hamiltonian_drift = out.h_end - out.h0;
  prop.diagnostics.accepted = out.accepted;
  return prop;
}

RetrainOutcome retrain_on_level(HnnModel& model, const std::vector<Vec>& level_seeds,
                                const HamiltonianSystem& sys, const HnnmcConfig& cfg,
                                const TrainConfig& train_cfg, TrainingDataset& accumulated,
                                Rng& rng, std::shared_ptr<std::atomic<long long>> grad_counter) {
  RetrainOutcome out;
  if (!cfg.retrain_enabled) throw InvalidArgument("retrain_on_level: retraining disabled");
  const int n_use =
      static_cast<int>(std::lround(cfg.retrain_fraction * static_cast<double>(level_seeds.size())));
  if (n_use == 0) return out;  // fraction 0: model unchanged

  const int d = sys.target.dim;
  const double alpha = sys.mass_scalar;
  GradientProvider gp = exact_gradient_provider(sys, grad_counter);
  const int L = cfg.retrain_trajectory_steps;

  TrainingDataset fresh;
  fresh.inputs.resize(2 * d, static_cast<long>(n_use) * (L + 1));
  fresh.labels.resize(2 * d, static_cast<long>(n_use) * (L + 1));
  long col = 0;
  for (int s = 0; s < n_use; ++s) {
    PhaseState st{level_seeds[s], std::sqrt(alpha) * rng.normal_vector(d)};
    try {
      Vec force = gp.eval(st).dp_dt;
      if (!all_finite(force)) throw IntegrationFailure("bad seed", st.q, st.p);
      for (int step = 0; step <= L; ++step) {
        fresh.inputs.col(col).head(d) = st.q;
        fresh.inputs.col(col).tail(d) = st.p;
        fresh.labels.col(col).head(d) = st.p / alpha;
        fresh.labels.col(col).tail(d) = force;
        ++col;
        if (step < L) st = leapfrog_step_with_force(sys, st, cfg.hmc.dt, gp, force);
      }
    } catch (const IntegrationFailure&) {
    }
  }
  fresh.inputs.conservativeResize(Eigen::NoChange, col);
  fresh.labels.conservativeResize(Eigen::NoChange, col);
  out.new_pairs = static_cast<int>(col);
  if (col == 0) return out;

  accumulated.append(fresh);

  HnnModel backup = model;
  TrainConfig tc = train_cfg;
  tc.epochs = cfg.retrain_epochs;
  tc.rng_seed = rng.raw();
  TrainResult tr = train(model, accumulated, tc);
  if (tr.diverged) {
    std::fprintf(stderr, "[hnnmc] retraining diverged; keeping previous weights\n");
    model = backup;
    out.diverged = true;
    return out;
  }
  out.retrained = true;
  return out;
}

}  // namespace hnnmc
