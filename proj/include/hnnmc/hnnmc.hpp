#pragma once

#include "hnnmc/hmc.hpp"
#include "hnnmc/hnn.hpp"

namespace hnnmc {

struct HnnmcConfig {
  HmcConfig hmc;
  double error_threshold = 10.0;   // delta-epsilon for the slice monitor
  bool monitoring_enabled = false;
  bool retrain_enabled = false;
  double retrain_fraction = 0.1;   // share of level seeds used for new data
  int retrain_trajectory_steps = 40;
  int retrain_epochs = 30;
  int monitor_trigger_count = 50;  // fallbacks per level that force a retrain
};

struct ProposalDiagnostics {
  int used_fallback_steps = 0;
  double hamiltonian_drift = 0.0;  // exact H* - H0 of the proposal
  bool accepted = false;
};

struct HnnmcProposal {
  Vec q;
  bool accepted = false;
  ProposalDiagnostics diagnostics;
  double log_density_end = 0.0;  // exact log pi at the returned state
};

/// Network-gradient proposal: leapfrog gradients come from the model, the
/// accept/reject uses the exact Hamiltonian. With monitoring enabled, steps
/// whose exact energy drift trips the slice check are redone with exact
/// gradients from `fallback` (per step, so a trajectory may mix sources).
HnnmcProposal hnnmc_propose(const HamiltonianSystem& sys, const HnnModel& model, const Vec& q0,
                            const HnnmcConfig& cfg, Rng& rng,
                            double logd_q0 = std::numeric_limits<double>::quiet_NaN(),
                            const GradientProvider* hnn_gp = nullptr,
                            const GradientProvider* fallback_gp = nullptr);

struct RetrainOutcome {
  bool retrained = false;
  bool diverged = false;
  int new_pairs = 0;
};

/// Generates exact-gradient trajectories from a fraction of the level's seed
/// samples, appends them to the accumulated dataset, and continues training
/// from the current weights. On divergence the previous weights are kept.
RetrainOutcome retrain_on_level(HnnModel& model, const std::vector<Vec>& level_seeds,
                                const HamiltonianSystem& sys, const HnnmcConfig& cfg,
                                const TrainConfig& train_cfg, TrainingDataset& accumulated,
                                Rng& rng,
                                std::shared_ptr<std::atomic<long long>> grad_counter = nullptr);

}  // namespace hnnmc
