#include "hnnmc/subsetsim.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

namespace hnnmc {

namespace {

constexpr std::uint64_t kStreamInit = 1ULL << 48;
constexpr std::uint64_t kStreamLevel0 = 2ULL << 48;
constexpr std::uint64_t kStreamCond = 3ULL << 48;
constexpr std::uint64_t kStreamRetrain = 4ULL << 48;

struct ChainPoint {
  Vec x;
  double g = 0.0;
  double logd = 0.0;
};

struct ChainCounters {
  long proposals = 0;
  long ham_accepts = 0;
  long indicator_candidates = 0;
  long indicator_accepts = 0;
  long fallback_steps = 0;
  long long limit_state_evals = 0;
  long long component_proposals = 0;
  long long component_accepts = 0;
};

}  // namespace

EvalLedger& EvalLedger::operator+=(const EvalLedger& o) {
  exact_grad_training += o.exact_grad_training;
  exact_grad_initial += o.exact_grad_initial;
  exact_grad_subset += o.exact_grad_subset;
  hnn_grad += o.hnn_grad;
  limit_state_evals += o.limit_state_evals;
  model_runs += o.model_runs;
  return *this;
}

void SubsetConfig::validate() const {
  std::string errors;
  if (samples_per_level < 2) errors += "samples_per_level must be >= 2; ";
  if (!(p0 > 0.0 && p0 < 1.0)) errors += "p0 must lie in (0,1); ";
  double np0 = samples_per_level * p0;
  if (std::abs(np0 - std::lround(np0)) > 1e-9 || std::lround(np0) < 1)
    errors += "N*p0 must be a positive integer; ";
  else if (samples_per_level % std::lround(np0) != 0)
    errors += "N must be divisible by N*p0 (integral chain length); ";
  if (max_levels < 1) errors += "max_levels must be >= 1; ";
  if (level0_chains < 1) errors += "level0_chains must be >= 1; ";
  if (level0_burnin < 0) errors += "level0_burnin must be >= 0; ";
  if (level0_thinning < 1) errors += "level0_thinning must be >= 1; ";
  if (!(sampler_cfg.hmc.dt > 0.0)) errors += "dt must be positive; ";
  if (sampler_cfg.hmc.L < 1) errors += "L must be >= 1; ";
  if (!(sampler_cfg.hmc.mass_scalar > 0.0)) errors += "mass_scalar must be positive; ";
  if (!(sampler_cfg.hmc.a_low > 0.0 && sampler_cfg.hmc.a_low < sampler_cfg.hmc.a_high &&
        sampler_cfg.hmc.a_high < 1.0))
    errors += "acceptance band must satisfy 0 < a_low < a_high < 1; ";
  if (sampler_kind == SamplerKind::hnnmc && sampler_cfg.monitoring_enabled &&
      !std::isfinite(sampler_cfg.error_threshold))
    errors += "error_threshold must be finite when monitoring is enabled; ";
  if (!errors.empty()) throw InvalidArgument("SubsetConfig: " + errors);
}

ThresholdAndSeeds compute_threshold_and_seeds(const std::vector<double>& g_values, double p0) {
  const int n = static_cast<int>(g_values.size());
  const int n_seeds = static_cast<int>(std::lround(n * p0));
  if (n_seeds < 1 || n_seeds >= n)
    throw InvalidArgument("compute_threshold_and_seeds: N*p0 out of range");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (g_values[a] != g_values[b]) return g_values[a] < g_values[b];
    return a < b;  // deterministic tie-break
  });

  ThresholdAndSeeds out;
  double b = 0.5 * (g_values[order[n_seeds - 1]] + g_values[order[n_seeds]]);
  if (b <= 0.0) {
    b = 0.0;
    out.is_final = true;
  }
  out.threshold = b;
  out.seed_indices.assign(order.begin(), order.begin() + n_seeds);
  return out;
}

namespace {

struct RunContext {
  const TargetDistribution& target;
  const LimitState& limit_state;
  const SubsetConfig& cfg;
  HamiltonianSystem sys;
  const HnnModel* model = nullptr;
  HmcConfig hcfg;  // live trajectory settings (L adapts between levels)
  double t_f = 0.0;
  double mean_period = 0.0;
  std::shared_ptr<std::atomic<long long>> cnt_init;
  std::shared_ptr<std::atomic<long long>> cnt_subset;
  std::shared_ptr<std::atomic<long long>> cnt_hnn;
  std::shared_ptr<std::atomic<long long>> cnt_retrain;
  std::uint64_t run_seed = 0;
};

GradientProvider make_sampler_provider(RunContext& ctx, bool initial_phase) {
  if (ctx.cfg.sampler_kind == SamplerKind::hnnmc)
    return hnn_gradient_provider(ctx.model, ctx.cnt_hnn);
  return exact_gradient_provider(ctx.sys, initial_phase ? ctx.cnt_init : ctx.cnt_subset);
}

// One Hamiltonian proposal + indicator gate. The limit state is evaluated only
// for Hamiltonian-accepted candidates; a rejected proposal keeps the stored
// (x, g, log-density) triple.
void conditional_step(RunContext& ctx, ChainPoint& state, double threshold,
                      const GradientProvider& gp, const GradientProvider* fallback, Rng& rng,
                      ChainCounters& cc) {
  MonitorSpec monitor;
  if (ctx.cfg.sampler_kind == SamplerKind::hnnmc && ctx.cfg.sampler_cfg.monitoring_enabled) {
    monitor.enabled = true;
    monitor.threshold = ctx.cfg.sampler_cfg.error_threshold;
    monitor.fallback = fallback;
  }
  ProposalOutcome out = propose_core(ctx.sys, state.x, state.logd, ctx.hcfg, rng, gp, monitor);
  cc.proposals++;
  cc.fallback_steps += out.fallback_steps;
  if (!out.accepted) return;
  cc.ham_accepts++;
  cc.indicator_candidates++;
  double g_new = evaluate_limit_state(ctx.limit_state, out.q);
  cc.limit_state_evals++;
  if (g_new <= threshold) {
    state.x = std::move(out.q);
    state.g = g_new;
    state.logd = out.log_density_end;
    cc.indicator_accepts++;
  }
}

void mmh_step(RunContext& ctx, ChainPoint& state, double threshold, Rng& rng, ChainCounters& cc) {
  const int d = ctx.target.dim;
  Vec candidate = state.x;
  bool moved = false;
  for (int i = 0; i < d; ++i) {
    double xi = state.x[i];
    double prop = xi + ctx.cfg.mmh_proposal_width * rng.normal();
    double log_ratio =
        ctx.target.marginal_log_density(i, prop) - ctx.target.marginal_log_density(i, xi);
    cc.component_proposals++;
    if (std::log(rng.uniform()) < log_ratio) {
      candidate[i] = prop;
      cc.component_accepts++;
      moved = true;
    }
  }
  cc.proposals++;
  if (!moved) return;
  cc.ham_accepts++;  // a candidate distinct from the current state
  cc.indicator_candidates++;
  double g_new = evaluate_limit_state(ctx.limit_state, candidate);
  cc.limit_state_evals++;
  if (g_new <= threshold) {
    state.x = std::move(candidate);
    state.g = g_new;
    cc.indicator_accepts++;
  }
}

SubsetLevel build_level0(RunContext& ctx, EvalLedger& ledger) {
  const SubsetConfig& cfg = ctx.cfg;
  const int N = cfg.samples_per_level;
  SubsetLevel lvl;
  lvl.index = 0;
  lvl.samples.resize(N);
  lvl.g_values.resize(N);
  lvl.log_densities.resize(N);

  if (cfg.sampler_kind == SamplerKind::mmh) {
    if (!ctx.target.initial_is_exact)
      throw InvalidArgument("mmh baseline needs an exact initial sampler for level 0");
    Rng rng(derive_seed(ctx.run_seed, kStreamLevel0));
    for (int i = 0; i < N; ++i) {
      lvl.samples[i] = ctx.target.initial_sampler(rng);
      lvl.g_values[i] = evaluate_limit_state(ctx.limit_state, lvl.samples[i]);
      lvl.log_densities[i] = std::numeric_limits<double>::quiet_NaN();
    }
    ledger.limit_state_evals += N;
    return lvl;
  }

  const int n_chains = std::min(cfg.level0_chains, N);
  std::vector<ChainCounters> counters(n_chains);
  std::vector<int> quota(n_chains, N / n_chains), offset(n_chains, 0);
  for (int c = 0; c < N % n_chains; ++c) quota[c]++;
  for (int c = 1; c < n_chains; ++c) offset[c] = offset[c - 1] + quota[c - 1];

  auto run_chain = [&](int c) {
    Rng rng(derive_seed(ctx.run_seed, kStreamLevel0 | static_cast<std::uint64_t>(c)));
    GradientProvider gp = make_sampler_provider(ctx, true);
    GradientProvider fallback = exact_gradient_provider(ctx.sys, ctx.cnt_init);
    ChainCounters& cc = counters[c];

    ChainPoint state;
    state.x = ctx.target.initial_sampler(rng);
    state.logd = ctx.target.log_density(state.x);
    MonitorSpec monitor;
    if (cfg.sampler_kind == SamplerKind::hnnmc && cfg.sampler_cfg.monitoring_enabled) {
      monitor.enabled = true;
      monitor.threshold = cfg.sampler_cfg.error_threshold;
      monitor.fallback = &fallback;
    }
    auto advance = [&]() {
      ProposalOutcome out = propose_core(ctx.sys, state.x, state.logd, ctx.hcfg, rng, gp, monitor);
      cc.proposals++;
      cc.fallback_steps += out.fallback_steps;
      if (out.accepted) {
        cc.ham_accepts++;
        state.x = std::move(out.q);
        state.logd = out.log_density_end;
      }
    };
    for (int b = 0; b < cfg.level0_burnin; ++b) advance();
    for (int i = 0; i < quota[c]; ++i) {
      for (int t = 0; t < cfg.level0_thinning; ++t) advance();
      int slot = offset[c] + i;
      lvl.samples[slot] = state.x;
      lvl.log_densities[slot] = state.logd;
      lvl.g_values[slot] = evaluate_limit_state(ctx.limit_state, state.x);
      cc.limit_state_evals++;
    }
  };

  std::vector<std::string> chain_errors(n_chains);
#pragma omp parallel for schedule(dynamic) if (cfg.parallel_chains)
  for (int c = 0; c < n_chains; ++c) {
    try {
      run_chain(c);
    } catch (const std::exception& e) {
      chain_errors[c] = e.what();
    }
  }
  for (const auto& err : chain_errors)
    if (!err.empty()) throw std::runtime_error("level-0 chain failed: " + err);

  long proposals = 0, accepts = 0;
  for (const auto& cc : counters) {
    proposals += cc.proposals;
    accepts += cc.ham_accepts;
    lvl.fallback_steps += cc.fallback_steps;
    ledger.limit_state_evals += cc.limit_state_evals;
  }
  lvl.proposals = proposals;
  lvl.acceptance_rate_hmc = proposals > 0 ? static_cast<double>(accepts) / proposals : 1.0;
  return lvl;
}

SubsetLevel build_conditional_level(RunContext& ctx, const SubsetLevel& prev,
                                    const std::vector<int>& seed_idx, EvalLedger& ledger,
                                    int level_index) {
  const SubsetConfig& cfg = ctx.cfg;
  const int N = cfg.samples_per_level;
  const int n_seeds = static_cast<int>(seed_idx.size());
  const int chain_len = N / n_seeds;  // seed counts as the first chain member
  const double threshold = prev.threshold;

  SubsetLevel lvl;
  lvl.index = level_index;
  lvl.samples.resize(N);
  lvl.g_values.resize(N);
  lvl.log_densities.resize(N);
  std::vector<ChainCounters> counters(n_seeds);

  auto run_chain = [&](int c) {
    Rng rng(derive_seed(ctx.run_seed, kStreamCond |
                                          (static_cast<std::uint64_t>(level_index) << 24) |
                                          static_cast<std::uint64_t>(c)));
    GradientProvider gp = make_sampler_provider(ctx, false);
    GradientProvider fallback = exact_gradient_provider(ctx.sys, ctx.cnt_subset);
    ChainCounters& cc = counters[c];

    ChainPoint state;
    const int src = seed_idx[c];
    state.x = prev.samples[src];
    state.g = prev.g_values[src];
    state.logd = prev.log_densities[src];
    if (std::isnan(state.logd)) state.logd = ctx.target.log_density(state.x);

    for (int step = 0; step < chain_len; ++step) {
      if (step > 0) {
        if (cfg.sampler_kind == SamplerKind::mmh)
          mmh_step(ctx, state, threshold, rng, cc);
        else
          conditional_step(ctx, state, threshold, gp, &fallback, rng, cc);
      }
      if (state.g > threshold)
        throw std::logic_error("subset nesting violated: g above the conditioning threshold");
      const int slot = c * chain_len + step;
      lvl.samples[slot] = state.x;
      lvl.g_values[slot] = state.g;
      lvl.log_densities[slot] = state.logd;
    }
  };

  std::vector<std::string> chain_errors(n_seeds);
#pragma omp parallel for schedule(dynamic) if (cfg.parallel_chains)
  for (int c = 0; c < n_seeds; ++c) {
    try {
      run_chain(c);
    } catch (const std::exception& e) {
      chain_errors[c] = e.what();
    }
  }
  for (const auto& err : chain_errors)
    if (!err.empty()) throw std::runtime_error("conditional chain failed: " + err);

  long proposals = 0, ham = 0, cand = 0, ind = 0;
  for (const auto& cc : counters) {
    proposals += cc.proposals;
    ham += cc.ham_accepts;
    cand += cc.indicator_candidates;
    ind += cc.indicator_accepts;
    lvl.fallback_steps += cc.fallback_steps;
    ledger.limit_state_evals += cc.limit_state_evals;
  }
  lvl.proposals = proposals;
  if (cfg.sampler_kind == SamplerKind::mmh) {
    long long cp = 0, ca = 0;
    for (const auto& cc : counters) {
      cp += cc.component_proposals;
      ca += cc.component_accepts;
    }
    lvl.acceptance_rate_hmc = cp > 0 ? static_cast<double>(ca) / cp : 0.0;
  } else {
    lvl.acceptance_rate_hmc = proposals > 0 ? static_cast<double>(ham) / proposals : 1.0;
  }
  lvl.acceptance_rate_indicator = cand > 0 ? static_cast<double>(ind) / cand : 1.0;
  return lvl;
}

}  // namespace

ReliabilityResult run_subset_simulation(const TargetDistribution& target,
                                        const LimitState& limit_state, const SubsetConfig& cfg,
                                        std::uint64_t seed, const HnnModel* model) {
  cfg.validate();
  if (cfg.sampler_kind == SamplerKind::hnnmc && model == nullptr)
    throw InvalidArgument("run_subset_simulation: hnnmc sampling needs a trained model");
  if (cfg.sampler_kind == SamplerKind::mmh && !target.marginal_log_density)
    throw InvalidArgument("run_subset_simulation: mmh needs marginal densities");
  if (cfg.sampler_kind == SamplerKind::mmh && !(cfg.mmh_proposal_width > 0.0))
    std::fprintf(stderr,
                 "[subsetsim] warning: mmh proposal width %.3g; chains will never move\n",
                 cfg.mmh_proposal_width);

  const auto t_start = std::chrono::steady_clock::now();
  long long model_runs0 =
      cfg.model_run_counter ? cfg.model_run_counter->load(std::memory_order_relaxed) : 0;

  RunContext ctx{target, limit_state, cfg,
                 HamiltonianSystem{target, cfg.sampler_cfg.hmc.mass_scalar}};
  ctx.model = model;
  ctx.hcfg = cfg.sampler_cfg.hmc;
  ctx.run_seed = seed;
  ctx.cnt_init = std::make_shared<std::atomic<long long>>(0);
  ctx.cnt_subset = std::make_shared<std::atomic<long long>>(0);
  ctx.cnt_hnn = std::make_shared<std::atomic<long long>>(0);
  ctx.cnt_retrain = std::make_shared<std::atomic<long long>>(0);
  ctx.t_f = ctx.hcfg.L * ctx.hcfg.dt;
  ctx.mean_period = ctx.hcfg.mean_period;

  // Model copy + accumulated dataset when per-level retraining may run.
  HnnModel working_model;
  TrainingDataset accumulated;
  const bool may_retrain =
      cfg.sampler_kind == SamplerKind::hnnmc &&
      (cfg.sampler_cfg.retrain_enabled || cfg.sampler_cfg.monitoring_enabled);
  if (may_retrain && model) {
    working_model = *model;
    ctx.model = &working_model;
    if (cfg.base_training_data) accumulated = *cfg.base_training_data;
  }

  if (cfg.sampler_kind != SamplerKind::mmh && cfg.init_trajectory) {
    Rng rng(derive_seed(seed, kStreamInit));
    std::vector<PhaseState> starts;
    starts.reserve(cfg.init_length_samples);
    for (int i = 0; i < cfg.init_length_samples; ++i) {
      Vec q = target.initial_sampler(rng);
      Vec p = std::sqrt(ctx.sys.mass_scalar) * rng.normal_vector(target.dim);
      starts.push_back({std::move(q), std::move(p)});
    }
    GradientProvider gp = make_sampler_provider(ctx, true);
    TrajectoryLengthInit tli = init_trajectory_length(ctx.sys, starts, ctx.hcfg.dt,
                                                      ctx.hcfg.division_factor_k, gp);
    ctx.mean_period = tli.mean_period;
    ctx.hcfg.L = tli.leapfrog_steps;
    ctx.t_f = tli.mean_period / ctx.hcfg.division_factor_k;
  }

  ReliabilityResult res;
  res.seed = seed;
  EvalLedger& ledger = res.ledger;

  SubsetLevel current = build_level0(ctx, ledger);
  while (true) {
    ThresholdAndSeeds ts = compute_threshold_and_seeds(current.g_values, cfg.p0);
    current.threshold = ts.threshold;

    if (ts.is_final) {
      int fails = 0;
      for (double g : current.g_values)
        if (g <= 0.0) fails++;
      res.levels.push_back(std::move(current));
      const int n_levels = static_cast<int>(res.levels.size());
      res.pf = std::pow(cfg.p0, n_levels - 1) * static_cast<double>(fails) / cfg.samples_per_level;
      res.censored = false;
      break;
    }
    if (static_cast<int>(res.levels.size()) + 1 >= cfg.max_levels) {
      res.levels.push_back(std::move(current));
      res.pf = std::pow(cfg.p0, static_cast<int>(res.levels.size()));  // upper bound
      res.censored = true;
      break;
    }
    // Stalled thresholds (no strict decrease) cannot converge; flag instead of looping.
    if (res.levels.size() >= 1 && !(ts.threshold < res.levels.back().threshold)) {
      std::fprintf(stderr, "[subsetsim] warning: threshold stalled at level %zu\n",
                   res.levels.size());
      res.levels.push_back(std::move(current));
      res.pf = std::pow(cfg.p0, static_cast<int>(res.levels.size()));
      res.censored = true;
      break;
    }

    const int next_index = static_cast<int>(res.levels.size()) + 1;

    if (cfg.sampler_kind != SamplerKind::mmh && cfg.adapt_trajectory && ctx.mean_period > 0.0) {
      TrajectoryLengthUpdate upd = adapt_trajectory_length(
          ctx.t_f, current.acceptance_rate_hmc, ctx.mean_period, ctx.hcfg);
      ctx.t_f = upd.t_f;
      ctx.hcfg.L = upd.leapfrog_steps;
    }

    std::vector<int> seed_idx = ts.seed_indices;
    if (may_retrain) {
      const bool monitor_trigger = cfg.sampler_cfg.monitoring_enabled &&
                                   current.fallback_steps > cfg.sampler_cfg.monitor_trigger_count;
      if (cfg.sampler_cfg.retrain_enabled || monitor_trigger) {
        std::vector<Vec> seed_states;
        seed_states.reserve(seed_idx.size());
        for (int i : seed_idx) seed_states.push_back(current.samples[i]);
        Rng rng(derive_seed(seed, kStreamRetrain | static_cast<std::uint64_t>(next_index)));
        HnnmcConfig rcfg = cfg.sampler_cfg;
        rcfg.retrain_enabled = true;
        if (!cfg.sampler_cfg.retrain_enabled) rcfg.retrain_fraction =
            std::max(rcfg.retrain_fraction, 0.1);
        retrain_on_level(working_model, seed_states, ctx.sys, rcfg, cfg.retrain_train_cfg,
                         accumulated, rng, ctx.cnt_retrain);
      }
    }

    SubsetLevel next = build_conditional_level(ctx, current, seed_idx, ledger, next_index - 1);
    if (!cfg.store_samples) {
      current.samples.clear();
      current.samples.shrink_to_fit();
    }
    res.levels.push_back(std::move(current));
    current = std::move(next);
  }

  if (!cfg.store_samples)
    for (auto& lvl : res.levels) {
      lvl.samples.clear();
      lvl.samples.shrink_to_fit();
    }

  res.beta = reliability_index(res.pf);
  ledger.exact_grad_initial = ctx.cnt_init->load();
  ledger.exact_grad_subset = ctx.cnt_subset->load();
  ledger.exact_grad_training = ctx.cnt_retrain->load();
  ledger.hnn_grad = ctx.cnt_hnn->load();
  if (cfg.model_run_counter)
    ledger.model_runs = cfg.model_run_counter->load(std::memory_order_relaxed) - model_runs0;
  res.total_model_evals = ledger.model_runs > 0 ? ledger.model_runs : ledger.limit_state_evals;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

ReliabilityResult run_mmh_baseline(const TargetDistribution& target, const LimitState& limit_state,
                                   const SubsetConfig& cfg, std::uint64_t seed) {
  SubsetConfig c = cfg;
  c.sampler_kind = SamplerKind::mmh;
  return run_subset_simulation(target, limit_state, c, seed);
}

TrialStats run_trials(const std::function<ReliabilityResult(std::uint64_t)>& experiment,
                      int n_trials, std::uint64_t master_seed, bool parallel) {
  if (n_trials < 2) throw InvalidArgument("run_trials: need at least 2 trials");
  TrialStats stats;
  stats.trials.resize(n_trials);

  std::vector<std::string> trial_errors(n_trials);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n_trials; ++i) {
    try {
      stats.trials[i] = experiment(derive_seed(master_seed, static_cast<std::uint64_t>(i) + 1));
    } catch (const std::exception& e) {
      trial_errors[i] = e.what();
    }
  }
  for (const auto& err : trial_errors)
    if (!err.empty()) throw std::runtime_error("trial failed: " + err);

  double sum = 0.0;
  int n_ok = 0;
  for (const auto& r : stats.trials) {
    if (r.censored) {
      stats.n_censored++;
      continue;
    }
    sum += r.beta;
    n_ok++;
  }
  if (n_ok > 0) {
    stats.mean_beta = sum / n_ok;
    double ss = 0.0;
    for (const auto& r : stats.trials)
      if (!r.censored) ss += (r.beta - stats.mean_beta) * (r.beta - stats.mean_beta);
    stats.var_beta = n_ok > 1 ? ss / (n_ok - 1) : 0.0;
    stats.cv_beta = stats.mean_beta != 0.0 ? std::sqrt(stats.var_beta) / stats.mean_beta : 0.0;
  }
  return stats;
}

}  // namespace hnnmc
