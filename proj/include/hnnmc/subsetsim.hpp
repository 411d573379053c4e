#pragma once

#include <functional>

#include "hnnmc/hnnmc.hpp"

namespace hnnmc {

enum class SamplerKind { mmh, hmc, hnnmc };

struct SubsetConfig {
  int samples_per_level = 1000;  // N
  double p0 = 0.1;               // conditional probability per level; N*p0 integral
  int max_levels = 30;           // including the unconditional level
  SamplerKind sampler_kind = SamplerKind::hmc;
  HnnmcConfig sampler_cfg;       // sampler_cfg.hmc also drives kind=hmc

  int level0_chains = 20;
  int level0_burnin = 500;
  int level0_thinning = 1;
  bool adapt_trajectory = true;   // between-level trajectory-length rule
  bool init_trajectory = true;    // period estimation before level 0
  int init_length_samples = 25;
  double mmh_proposal_width = 1.0;

  bool parallel_chains = true;    // OpenMP across chains; the serial path is
                                  // the reference and produces identical output
  bool store_samples = true;      // keep per-level sample vectors (2-D plots)

  const TrainingDataset* base_training_data = nullptr;  // appended to when retraining
  TrainConfig retrain_train_cfg;

  // Optional hook counting underlying model runs (targets whose density needs
  // a forward model); snapshotted into the ledger.
  std::shared_ptr<std::atomic<long long>> model_run_counter;

  void validate() const;  // throws InvalidArgument listing every violation
};

struct SubsetLevel {
  int index = 0;
  double threshold = 0.0;  // b_l computed from this level's samples
  std::vector<Vec> samples;
  std::vector<double> g_values;
  std::vector<double> log_densities;
  double acceptance_rate_hmc = 1.0;        // Hamiltonian (or component-move) criterion
  double acceptance_rate_indicator = 1.0;  // subset rejection criterion, over the
                                           // candidates that reached it
  long proposals = 0;
  long fallback_steps = 0;
};

/// Gradient / model evaluation accounting, split the way the benchmark tables
/// report it: exact gradients spent on training data, on the initial
/// (unconditional) set, and inside the conditional levels.
struct EvalLedger {
  long long exact_grad_training = 0;
  long long exact_grad_initial = 0;
  long long exact_grad_subset = 0;
  long long hnn_grad = 0;
  long long limit_state_evals = 0;
  long long model_runs = 0;

  EvalLedger& operator+=(const EvalLedger& o);
};

struct ReliabilityResult {
  double pf = 0.0;
  double beta = 0.0;
  bool censored = false;  // max_levels reached; pf is an upper bound
  std::vector<SubsetLevel> levels;
  EvalLedger ledger;
  long long total_model_evals = 0;  // model_runs when a forward model backs the
                                    // target, otherwise limit-state evaluations
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct ThresholdAndSeeds {
  double threshold = 0.0;            // midpoint of the order statistics, floored at 0
  std::vector<int> seed_indices;     // the N*p0 smallest-g samples
  bool is_final = false;             // threshold hit 0
};

/// Stable ascending sort by (g, index); b = midpoint between the (N p0)-th and
/// (N p0 + 1)-th order statistics, set to 0 when non-positive (final level).
ThresholdAndSeeds compute_threshold_and_seeds(const std::vector<double>& g_values, double p0);

/// Full Subset Simulation run. `model` is required for sampler_kind hnnmc and
/// is copied when per-level retraining is enabled.
ReliabilityResult run_subset_simulation(const TargetDistribution& target,
                                        const LimitState& limit_state, const SubsetConfig& cfg,
                                        std::uint64_t seed, const HnnModel* model = nullptr);

/// Component-wise Metropolis-Hastings comparator inside the same level
/// machinery (requires marginal densities and an exact initial sampler).
ReliabilityResult run_mmh_baseline(const TargetDistribution& target, const LimitState& limit_state,
                                   const SubsetConfig& cfg, std::uint64_t seed);

struct TrialStats {
  double mean_beta = 0.0;
  double var_beta = 0.0;
  double cv_beta = 0.0;
  int n_censored = 0;  // censored trials are excluded from the moments
  std::vector<ReliabilityResult> trials;
};

/// Runs `experiment` once per trial with a seed derived from (master_seed, i);
/// trial order never affects any output.
TrialStats run_trials(const std::function<ReliabilityResult(std::uint64_t)>& experiment,
                      int n_trials, std::uint64_t master_seed, bool parallel = true);

}  // namespace hnnmc
