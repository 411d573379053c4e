#include "hnnmc/harness.hpp"

#include <chrono>
#include <fstream>

namespace hnnmc {

namespace {

using clock_t_ = std::chrono::steady_clock;

double seconds_since(clock_t_::time_point t0) {
  return std::chrono::duration<double>(clock_t_::now() - t0).count();
}

const char* kPresetTable[][3] = {
    {"bimodal-demo", "one-dimensional bimodal mixture: learned-dynamics sampling demo",
     R"({
  "experiment": "bimodal-demo", "master_seed": 101, "output_dir": "out/bimodal-demo",
  "sampler": "hnnmc", "n_trials": 0,
  "target": {"mu1": 0.0, "mu2": 3.0, "sigma": 1.0},
  "demo": {"n_samples": 5000, "burnin": 200},
  "subset": {"dt": 0.05, "leapfrog_steps": 20, "mass_scalar": 1.0},
  "training": {"n_starts": 40, "trajectory_steps": 400, "dt": 0.05, "epochs": 400,
               "batch_size": 256, "learning_rate": 1e-3, "hidden_layers": 2,
               "hidden_units": 10, "latent": false, "activation": "tanh", "seed": 11}
})"},
    {"corr-gauss-2d-demo", "shifted correlated bivariate Gaussian: trajectory accuracy demo",
     R"({
  "experiment": "corr-gauss-2d-demo", "master_seed": 102, "output_dir": "out/corr-gauss-2d-demo",
  "sampler": "hnnmc", "n_trials": 0,
  "target": {"rho": 0.9, "shift": [1.0, -1.0]},
  "demo": {"n_samples": 5000, "burnin": 200, "trajectory_steps": 150},
  "subset": {"dt": 0.05, "leapfrog_steps": 25, "mass_scalar": 1.0},
  "training": {"n_starts": 100, "trajectory_steps": 400, "dt": 0.05, "epochs": 250,
               "batch_size": 512, "learning_rate": 1e-3, "hidden_layers": 3,
               "hidden_units": 100, "latent": true, "activation": "tanh", "seed": 12}
})"},
    {"degenerate-gaussian", "linear limit state under a correlated Gaussian",
     R"({
  "experiment": "degenerate-gaussian", "master_seed": 103, "output_dir": "out/degenerate-gaussian",
  "sampler": "hnnmc", "n_trials": 100,
  "target": {"n": 2, "rho": 0.9, "beta": 3.0},
  "subset": {"samples_per_level": 1000, "p0": 0.1, "max_levels": 30,
             "level0_chains": 20, "level0_burnin": 500, "dt": 0.05, "leapfrog_steps": 20,
             "store_samples": true},
  "training": {"n_starts": 1000, "trajectory_steps": 399, "dt": 0.05, "epochs": 150,
               "batch_size": 512, "learning_rate": 1e-3, "hidden_layers": 3,
               "hidden_units": 100, "latent": true, "activation": "tanh", "seed": 13}
})"},
    {"rosenbrock", "two-dimensional Rosenbrock density with a linear limit state",
     R"({
  "experiment": "rosenbrock", "master_seed": 104, "output_dir": "out/rosenbrock",
  "sampler": "hnnmc", "n_trials": 100,
  "target": {"k": 1.0},
  "subset": {"samples_per_level": 1000, "p0": 0.1, "max_levels": 30,
             "level0_chains": 20, "level0_burnin": 500, "dt": 0.05, "leapfrog_steps": 20,
             "store_samples": true},
  "training": {"n_starts": 1000, "trajectory_steps": 799, "dt": 0.05, "epochs": 150,
               "batch_size": 512, "learning_rate": 1e-3, "hidden_layers": 3,
               "hidden_units": 100, "latent": true, "activation": "tanh", "seed": 14}
})"},
    {"spring-damper", "primary-secondary oscillator with lognormal parameters",
     R"({
  "experiment": "spring-damper", "master_seed": 105, "output_dir": "out/spring-damper",
  "sampler": "hnnmc", "n_trials": 100,
  "target": {},
  "subset": {"samples_per_level": 1000, "p0": 0.1, "max_levels": 30,
             "level0_chains": 20, "level0_burnin": 500, "dt": 0.05, "leapfrog_steps": 20,
             "store_samples": false},
  "training": {"n_starts": 1000, "trajectory_steps": 399, "dt": 0.05, "epochs": 150,
               "batch_size": 512, "learning_rate": 1e-3, "hidden_layers": 3,
               "hidden_units": 100, "latent": true, "activation": "tanh", "seed": 15}
})"},
    {"white-noise", "white-noise-excited linear SDOF first-passage problem (200 variables)",
     R"({
  "experiment": "white-noise", "master_seed": 106, "output_dir": "out/white-noise",
  "sampler": "hnnmc", "n_trials": 100,
  "target": {"u_lim": 0.02},
  "subset": {"samples_per_level": 1000, "p0": 0.1, "max_levels": 30,
             "level0_chains": 20, "level0_burnin": 100, "dt": 0.15, "leapfrog_steps": 10,
             "store_samples": false},
  "training": {"n_starts": 1000, "trajectory_steps": 399, "dt": 0.15, "epochs": 120,
               "batch_size": 512, "learning_rate": 1e-3, "hidden_layers": 3,
               "hidden_units": 100, "latent": true, "activation": "tanh", "seed": 16}
})"},
    {"boucwen-bayes", "Bouc-Wen SDOF: Bayesian inference of parameters, then reliability",
     R"({
  "experiment": "boucwen-bayes", "master_seed": 107, "output_dir": "out/boucwen-bayes",
  "sampler": "hnnmc", "n_trials": 100,
  "target": {"u_lim": 0.25, "mass": 1.0, "truth": {"k": 1.0, "r0": 0.025, "delta": 1.0, "n": 2.0},
             "record_points": 2001, "record_dt": 0.02, "noise_rms_fraction": 0.05,
             "damping_true": 0.02, "record_file": "", "record_seed": 33,
             "posterior_samples": 5000,
             "harvest": {"n_samples": 5000, "leapfrog_steps": 50, "dt": 0.025, "burnin": 100}},
  "subset": {"samples_per_level": 1000, "p0": 0.1, "max_levels": 30,
             "level0_chains": 10, "level0_burnin": 200, "dt": 0.025, "leapfrog_steps": 20,
             "store_samples": false},
  "training": {"epochs": 150, "batch_size": 512, "learning_rate": 1e-3, "hidden_layers": 3,
               "hidden_units": 100, "latent": true, "activation": "tanh", "seed": 17}
})"},
};

json desk_patch(const std::string& id) {
  // reduced trial counts and training budgets for laptop-scale runs
  if (id == "degenerate-gaussian")
    return json::parse(R"({"n_trials": 20,
      "subset": {"level0_burnin": 200},
      "training": {"n_starts": 100, "trajectory_steps": 399, "epochs": 100}})");
  if (id == "rosenbrock")
    return json::parse(R"({"n_trials": 20,
      "subset": {"level0_burnin": 200},
      "training": {"n_starts": 150, "trajectory_steps": 399, "epochs": 100}})");
  if (id == "spring-damper")
    return json::parse(R"({"n_trials": 30,
      "subset": {"level0_burnin": 200},
      "training": {"n_starts": 100, "trajectory_steps": 399, "epochs": 80}})");
  if (id == "white-noise")
    return json::parse(R"({"n_trials": 20,
      "subset": {"level0_burnin": 60, "level0_chains": 10},
      "training": {"n_starts": 50, "trajectory_steps": 399, "epochs": 60}})");
  if (id == "boucwen-bayes")
    return json::parse(R"({"n_trials": 5,
      "target": {"record_points": 501, "record_dt": 0.02,
                 "harvest": {"n_samples": 500, "leapfrog_steps": 20, "dt": 0.025, "burnin": 50},
                 "posterior_samples": 3000},
      "subset": {"level0_burnin": 100},
      "training": {"epochs": 100}})");
  if (id == "bimodal-demo" || id == "corr-gauss-2d-demo")
    return json::parse(R"({"training": {"epochs": 150}})");
  return json::object();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  json j = json::parse(is, nullptr, true, true);  // allow comments
  return from_json(std::move(j));
}

ExperimentConfig ExperimentConfig::from_json(json j) {
  auto errors = validate_config(j);
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw InvalidArgument(msg);
  }
  ExperimentConfig cfg;
  cfg.raw = std::move(j);
  return cfg;
}

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& row : kPresetTable) out.push_back({row[0], row[1]});
  return out;
}

json preset_config(const std::string& id, bool desk) {
  for (const auto& row : kPresetTable) {
    if (id == row[0]) {
      json j = json::parse(row[2]);
      if (desk) j.merge_patch(desk_patch(id));
      return j;
    }
  }
  throw InvalidArgument("unknown preset: " + id);
}

std::vector<std::string> validate_config(const json& cfg) {
  std::vector<std::string> errors;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  static const std::vector<std::string> kIds = {
      "bimodal-demo", "corr-gauss-2d-demo", "degenerate-gaussian", "rosenbrock",
      "spring-damper", "white-noise",       "boucwen-bayes"};
  const std::string id = cfg.value("experiment", "");
  require(std::find(kIds.begin(), kIds.end(), id) != kIds.end(),
          "experiment must be one of the known ids (got '" + id + "')");
  require(cfg.contains("master_seed") && cfg["master_seed"].is_number_integer(),
          "master_seed must be an integer");
  const bool demo = id == "bimodal-demo" || id == "corr-gauss-2d-demo";
  if (!demo)
    require(cfg.value("n_trials", 0) >= 1, "n_trials must be >= 1 for simulation experiments");
  const std::string sampler = cfg.value("sampler", "");
  require(sampler == "hmc" || sampler == "hnnmc" || sampler == "mmh",
          "sampler must be one of mmh|hmc|hnnmc");

  if (cfg.contains("subset")) {
    const json& s = cfg["subset"];
    int N = s.value("samples_per_level", 1000);
    double p0 = s.value("p0", 0.1);
    require(N >= 2, "subset.samples_per_level must be >= 2");
    require(p0 > 0.0 && p0 < 1.0, "subset.p0 must lie in (0,1)");
    double np0 = N * p0;
    if (std::abs(np0 - std::lround(np0)) > 1e-9 || std::lround(np0) < 1)
      errors.push_back("subset: N*p0 must be a positive integer");
    else if (N % std::lround(np0) != 0)
      errors.push_back("subset: N must be divisible by N*p0");
    require(s.value("dt", 0.05) > 0.0, "subset.dt must be positive");
    require(s.value("leapfrog_steps", 10) >= 1, "subset.leapfrog_steps must be >= 1");
  }
  if (sampler == "hnnmc" && !demo)
    require(cfg.contains("training") || !cfg.value("model_path", std::string{}).empty(),
            "hnnmc runs need a training block or a model_path");
  if (cfg.contains("training")) {
    const json& t = cfg["training"];
    require(t.value("epochs", 0) >= 0, "training.epochs must be >= 0");
    require(t.value("batch_size", 1) >= 1, "training.batch_size must be >= 1");
    require(t.value("learning_rate", 1e-3) > 0.0, "training.learning_rate must be positive");
    require(t.value("hidden_layers", 3) >= 1, "training.hidden_layers must be >= 1");
    require(t.value("hidden_units", 100) >= 1, "training.hidden_units must be >= 1");
    const std::string act = t.value("activation", "tanh");
    require(act == "tanh" || act == "sine", "training.activation must be tanh|sine");
  }
  if (id == "degenerate-gaussian" && cfg.contains("target")) {
    const json& t = cfg["target"];
    require(t.value("n", 2) >= 1, "target.n must be >= 1");
    double rho = t.value("rho", 0.0);
    require(rho >= 0.0 && rho < 1.0, "target.rho must lie in [0,1)");
    require(t.value("beta", 3.0) > 0.0, "target.beta must be positive");
  }
  if (id == "rosenbrock" && cfg.contains("target"))
    require(cfg["target"].value("k", 1.0) > 0.0, "target.k must be positive");
  if (id == "white-noise" && cfg.contains("target"))
    require(cfg["target"].value("u_lim", 0.02) > 0.0, "target.u_lim must be positive");
  if (id == "boucwen-bayes" && cfg.contains("target")) {
    const json& t = cfg["target"];
    require(t.value("u_lim", 1.0) > 0.0, "target.u_lim must be positive");
    require(t.value("mass", 1.0) > 0.0, "target.mass must be positive");
    require(t.value("record_points", 100) >= 2, "target.record_points must be >= 2");
    require(t.value("record_dt", 0.02) > 0.0, "target.record_dt must be positive");
  }
  return errors;
}

namespace {

SubsetConfig subset_from_json(const json& cfg) {
  SubsetConfig sc;
  const json s = cfg.value("subset", json::object());
  sc.samples_per_level = s.value("samples_per_level", 1000);
  sc.p0 = s.value("p0", 0.1);
  sc.max_levels = s.value("max_levels", 30);
  sc.level0_chains = s.value("level0_chains", 20);
  sc.level0_burnin = s.value("level0_burnin", 500);
  sc.level0_thinning = s.value("level0_thinning", 1);
  sc.adapt_trajectory = s.value("adapt_trajectory", true);
  sc.init_trajectory = s.value("init_trajectory", true);
  sc.init_length_samples = s.value("init_length_samples", 25);
  sc.mmh_proposal_width = s.value("mmh_proposal_width", 1.0);
  sc.parallel_chains = s.value("parallel", true);
  sc.store_samples = s.value("store_samples", true);
  sc.sampler_cfg.hmc.dt = s.value("dt", 0.05);
  sc.sampler_cfg.hmc.L = s.value("leapfrog_steps", 20);
  sc.sampler_cfg.hmc.mass_scalar = s.value("mass_scalar", 1.0);
  sc.sampler_cfg.hmc.a_low = s.value("a_low", 0.3);
  sc.sampler_cfg.hmc.a_high = s.value("a_high", 0.5);
  sc.sampler_cfg.hmc.division_factor_k = s.value("division_factor_k", 4.0);
  sc.sampler_cfg.monitoring_enabled = s.value("monitoring", false);
  sc.sampler_cfg.error_threshold = s.value("error_threshold", 10.0);
  sc.sampler_cfg.retrain_enabled = s.value("retrain", false);
  sc.sampler_cfg.retrain_fraction = s.value("retrain_fraction", 0.1);
  sc.sampler_cfg.retrain_trajectory_steps = s.value("retrain_trajectory_steps", 40);
  sc.sampler_cfg.retrain_epochs = s.value("retrain_epochs", 30);
  sc.sampler_cfg.monitor_trigger_count = s.value("monitor_trigger_count", 50);
  const std::string sampler = cfg.value("sampler", "hmc");
  sc.sampler_kind = sampler == "mmh"    ? SamplerKind::mmh
                    : sampler == "hmc"  ? SamplerKind::hmc
                                        : SamplerKind::hnnmc;
  return sc;
}

TrainConfig train_cfg_from_json(const json& cfg) {
  TrainConfig tc;
  const json t = cfg.value("training", json::object());
  tc.epochs = t.value("epochs", 150);
  tc.batch_size = t.value("batch_size", 512);
  tc.learning_rate = t.value("learning_rate", 1e-3);
  tc.hidden_layers = t.value("hidden_layers", 3);
  tc.hidden_units = t.value("hidden_units", 100);
  tc.rng_seed = t.value("seed", 1);
  tc.val_fraction = t.value("val_fraction", 0.1);
  tc.patience = t.value("patience", 20);
  tc.activation = t.value("activation", std::string("tanh")) == "sine" ? Activation::Sine
                                                                       : Activation::Tanh;
  return tc;
}

std::shared_ptr<BoucWenProblem> build_boucwen(const json& tgt) {
  BoucWenParams truth{tgt.value("truth", json::object()).value("k", 1.0),
                      tgt.value("truth", json::object()).value("r0", 0.025),
                      tgt.value("truth", json::object()).value("delta", 1.0),
                      tgt.value("truth", json::object()).value("n", 2.0)};
  const double mass = tgt.value("mass", 1.0);
  ObservedRecord rec;
  const std::string rec_file = tgt.value("record_file", std::string{});
  if (!rec_file.empty()) {
    rec = load_record(rec_file);
  } else {
    const int npts = tgt.value("record_points", 501);
    const double dt = tgt.value("record_dt", 0.02);
    std::vector<double> t(npts);
    for (int i = 0; i < npts; ++i) t[i] = i * dt;
    std::vector<double> ag = synthetic_ground_motion(
        npts, dt, 0.4, 3.0, 32, tgt.value("record_amplitude", 0.12),
        tgt.value("record_seed", 33));
    const double wn = std::sqrt(truth.k / mass);
    const double c_true = 2.0 * mass * tgt.value("damping_true", 0.02) * wn;
    rec = make_observed_record(truth, t, ag, mass, c_true,
                               tgt.value("noise_rms_fraction", 0.05),
                               tgt.value("record_seed", 33) + 1);
  }
  Vec scale(4);
  scale << truth.k, truth.r0, truth.delta, truth.n;  // nominal magnitudes
  return std::make_shared<BoucWenProblem>(std::move(rec), mass, default_boucwen_prior(), scale,
                                          tgt.value("u_lim", 0.25));
}

}  // namespace

ExperimentSetup build_setup(const json& cfg) {
  ExperimentSetup setup;
  setup.subset = subset_from_json(cfg);
  setup.needs_model = setup.subset.sampler_kind == SamplerKind::hnnmc;
  const std::string id = cfg.value("experiment", "");
  const json tgt = cfg.value("target", json::object());

  if (id == "bimodal-demo") {
    setup.target = make_gaussian_mixture_1d(tgt.value("mu1", 0.0), tgt.value("mu2", 3.0),
                                            tgt.value("sigma", 1.0));
    setup.latent_dim = 1;
  } else if (id == "corr-gauss-2d-demo") {
    Vec shift(2);
    auto sh = tgt.value("shift", std::vector<double>{1.0, -1.0});
    shift << sh[0], sh[1];
    setup.target = shift_target(make_correlated_gaussian(2, tgt.value("rho", 0.9)), shift);
    setup.latent_dim = 2;
  } else if (id == "degenerate-gaussian") {
    const int n = tgt.value("n", 2);
    const double rho = tgt.value("rho", 0.9);
    setup.target = make_correlated_gaussian(n, rho);
    const double sigma_max = 1.0 + (n - 1) * rho;
    setup.limit_state = make_linear_limit_state(tgt.value("beta", 3.0), n, sigma_max);
    setup.latent_dim = n;
  } else if (id == "rosenbrock") {
    setup.target = make_rosenbrock(tgt.value("k", 1.0));
    setup.limit_state = LimitState{
        [](const Vec& x) { return 120.0 - x[1] - 3.0 * x[0]; }, "rosenbrock_linear", 2};
    setup.latent_dim = 2;
  } else if (id == "spring-damper") {
    setup.target = make_spring_damper_target();
    setup.limit_state = make_spring_damper_limit_state_scaled();
    setup.latent_dim = 8;
  } else if (id == "white-noise") {
    WhiteNoiseSpec spec;
    spec.dt_response = tgt.value("dt_response", 0.005);
    setup.white_noise = std::make_shared<WhiteNoiseSynthesizer>(spec);
    setup.target = make_correlated_gaussian(spec.n, 0.0);
    setup.limit_state = make_white_noise_limit_state(setup.white_noise, tgt.value("u_lim", 0.02));
    setup.latent_dim = spec.n;
  } else if (id == "boucwen-bayes") {
    setup.boucwen = build_boucwen(tgt);
    setup.target = setup.boucwen->posterior_target(tgt.value("fd_step", 1e-4));
    setup.limit_state = setup.boucwen->reliability_limit_state();
    setup.subset.model_run_counter = setup.boucwen->run_counter();
    setup.latent_dim = 4;
  } else {
    throw InvalidArgument("unknown experiment id: " + id);
  }
  return setup;
}

namespace {

// Exact-gradient HMC chain over the Bouc-Wen posterior; every visited state
// contributes one training pair, mirroring how the inference-stage gradients
// are harvested and reused.
TrainingDataset harvest_posterior_training_data(const ExperimentSetup& setup, const json& cfg,
                                                EvalLedger& ledger, Rng& rng) {
  const json h = cfg["target"].value("harvest", json::object());
  const int n_samples = h.value("n_samples", 500);
  const int L = h.value("leapfrog_steps", 20);
  const double dt = h.value("dt", 0.025);
  const int burnin = h.value("burnin", 50);

  HamiltonianSystem sys{setup.target, 1.0};
  auto grad_counter = std::make_shared<std::atomic<long long>>(0);
  GradientProvider gp = exact_gradient_provider(sys, grad_counter);
  HmcConfig hc;
  hc.dt = dt;
  hc.L = L;

  const int d = setup.target.dim;
  TrainingDataset ds;
  ds.inputs.resize(2 * d, static_cast<long>(n_samples) * L);
  ds.labels.resize(2 * d, static_cast<long>(n_samples) * L);
  long col = 0;

  Vec q = setup.target.initial_sampler(rng);
  double logd = setup.target.log_density(q);
  for (int i = 0; i < burnin; ++i) {
    ProposalOutcome out = propose_core(sys, q, logd, hc, rng, gp);
    if (out.accepted) {
      q = out.q;
      logd = out.log_density_end;
    }
  }
  for (int i = 0; i < n_samples; ++i) {
    // integrate one trajectory, recording every leapfrog state as a pair
    Vec p = rng.normal_vector(d);
    PhaseState st{q, p};
    bool failed = false;
    try {
      Vec force = gp.eval(st).dp_dt;
      if (!all_finite(force)) throw IntegrationFailure("bad start", st.q, st.p);
      for (int step = 0; step < L; ++step) {
        st = leapfrog_step_with_force(sys, st, dt, gp, force);
        ds.inputs.col(col).head(d) = st.q;
        ds.inputs.col(col).tail(d) = st.p;
        ds.labels.col(col).head(d) = st.p;
        ds.labels.col(col).tail(d) = force;
        ++col;
      }
    } catch (const IntegrationFailure&) {
      failed = true;
    }
    if (!failed) {
      double h0 = -logd + 0.5 * p.squaredNorm();
      double logd_end = setup.target.log_density(st.q);
      double h1 = -logd_end + 0.5 * st.p.squaredNorm();
      if (std::isfinite(h1) && std::min(1.0, std::exp(h0 - h1)) >= rng.uniform()) {
        q = st.q;
        logd = logd_end;
      }
    } else {
      rng.uniform();  // keep the accept draw in the stream
    }
  }
  ds.inputs.conservativeResize(Eigen::NoChange, col);
  ds.labels.conservativeResize(Eigen::NoChange, col);
  ledger.exact_grad_training += grad_counter->load();
  return ds;
}

}  // namespace

HnnModel prepare_model(const json& cfg, const ExperimentSetup& setup, EvalLedger& ledger,
                       double& seconds, TrainingDataset* keep_data) {
  const auto t0 = clock_t_::now();
  const std::string model_path = cfg.value("model_path", std::string{});
  if (!model_path.empty() && cfg.value("model_load", true) &&
      std::ifstream(model_path).good()) {
    HnnModel m = load_model(model_path);
    seconds = seconds_since(t0);
    return m;
  }

  TrainConfig tc = train_cfg_from_json(cfg);
  const json tr = cfg.value("training", json::object());
  const bool latent = tr.value("latent", true);
  const int d = setup.target.dim;
  Rng init_rng(derive_seed(tc.rng_seed, 0xA11CE));
  HnnModel model = make_hnn_model(2 * d, latent ? d : 1, tc.hidden_layers, tc.hidden_units,
                                  tc.activation, init_rng);

  TrainingDataset data;
  Rng data_rng(derive_seed(tc.rng_seed, 0xDA7A));
  if (cfg.value("experiment", "") == "boucwen-bayes") {
    data = harvest_posterior_training_data(setup, cfg, ledger, data_rng);
  } else {
    auto grad_counter = std::make_shared<std::atomic<long long>>(0);
    HamiltonianSystem sys{setup.target, setup.subset.sampler_cfg.hmc.mass_scalar};
    data = generate_training_data(sys, tr.value("n_starts", 100),
                                  tr.value("trajectory_steps", 399), tr.value("dt", 0.05),
                                  data_rng, grad_counter);
    ledger.exact_grad_training += grad_counter->load();
  }

  TrainResult trr = train(model, data, tc);
  if (trr.diverged) throw std::runtime_error("prepare_model: training diverged");
  if (keep_data) *keep_data = std::move(data);
  if (!model_path.empty()) save_model(model, model_path);
  seconds = seconds_since(t0);
  return model;
}

namespace {

RunReport run_bimodal_demo(const ExperimentConfig& cfg, ExperimentSetup& setup) {
  RunReport rep;
  rep.experiment_id = "bimodal-demo";
  double train_s = 0.0;
  HnnModel model = prepare_model(cfg.raw, setup, rep.training_ledger, train_s);
  rep.train_seconds = train_s;

  const auto t0 = clock_t_::now();
  const json demo = cfg.raw.value("demo", json::object());
  const int n_samples = demo.value("n_samples", 5000);
  const int burnin = demo.value("burnin", 200);
  HamiltonianSystem sys{setup.target, 1.0};
  HnnmcConfig hcfg = setup.subset.sampler_cfg;
  Rng rng(cfg.raw.value("master_seed", 1));

  GradientProvider gp = hnn_gradient_provider(&model);
  std::vector<PhaseState> starts;
  for (int i = 0; i < 25; ++i)
    starts.push_back({setup.target.initial_sampler(rng), rng.normal_vector(1)});
  TrajectoryLengthInit tli =
      init_trajectory_length(sys, starts, hcfg.hmc.dt, hcfg.hmc.division_factor_k, gp);
  hcfg.hmc.L = tli.leapfrog_steps;

  Vec q(1);
  q[0] = 0.0;
  double logd = setup.target.log_density(q);
  long accepted = 0;
  std::vector<double> samples;
  samples.reserve(n_samples);
  for (int i = 0; i < burnin + n_samples; ++i) {
    HnnmcProposal prop = hnnmc_propose(sys, model, q, hcfg, rng, logd);
    if (prop.accepted) {
      q = prop.q;
      logd = prop.log_density_end;
      if (i >= burnin) accepted++;
    }
    if (i >= burnin) samples.push_back(q[0]);
  }
  const double midpoint = 1.5;
  long right = 0;
  for (double s : samples)
    if (s > midpoint) right++;
  rep.metrics["acceptance_rate"] = static_cast<double>(accepted) / n_samples;
  rep.metrics["mass_right_of_midpoint"] = static_cast<double>(right) / n_samples;
  rep.metrics["mass_right_analytic"] =
      0.25 * (1.0 - normal_cdf(1.5)) + 0.75 * (1.0 - normal_cdf(-1.5));
  rep.metrics["mean_period_estimate"] = tli.mean_period;
  rep.sampling_seconds = seconds_since(t0);
  rep.config_echo = cfg.raw.dump(2);
  return rep;
}

RunReport run_corr_gauss_demo(const ExperimentConfig& cfg, ExperimentSetup& setup) {
  RunReport rep;
  rep.experiment_id = "corr-gauss-2d-demo";
  double train_s = 0.0;
  HnnModel model = prepare_model(cfg.raw, setup, rep.training_ledger, train_s);
  rep.train_seconds = train_s;

  const auto t0 = clock_t_::now();
  const json demo = cfg.raw.value("demo", json::object());
  const int n_samples = demo.value("n_samples", 5000);
  const int burnin = demo.value("burnin", 200);
  const int traj_steps = demo.value("trajectory_steps", 150);
  HamiltonianSystem sys{setup.target, 1.0};
  HnnmcConfig hcfg = setup.subset.sampler_cfg;
  Rng rng(cfg.raw.value("master_seed", 1));

  Vec q = setup.target.initial_sampler(rng);
  double logd = setup.target.log_density(q);
  long accepted = 0;
  Vec mean = Vec::Zero(2);
  double m11 = 0, m22 = 0, m12 = 0;
  for (int i = 0; i < burnin + n_samples; ++i) {
    HnnmcProposal prop = hnnmc_propose(sys, model, q, hcfg, rng, logd);
    if (prop.accepted) {
      q = prop.q;
      logd = prop.log_density_end;
      if (i >= burnin) accepted++;
    }
    if (i >= burnin) {
      mean += q;
      m11 += q[0] * q[0];
      m22 += q[1] * q[1];
      m12 += q[0] * q[1];
    }
  }
  mean /= n_samples;
  const double c11 = m11 / n_samples - mean[0] * mean[0];
  const double c22 = m22 / n_samples - mean[1] * mean[1];
  const double c12 = m12 / n_samples - mean[0] * mean[1];

  // one long trajectory, exact vs network gradients, from the same state
  PhaseState s0{mean, rng.normal_vector(2)};
  GradientProvider exact = exact_gradient_provider(sys);
  GradientProvider learned = hnn_gradient_provider(&model);
  Trajectory t_exact = integrate_trajectory(sys, s0, traj_steps, hcfg.hmc.dt, exact);
  Trajectory t_hnn = integrate_trajectory(sys, s0, traj_steps, hcfg.hmc.dt, learned);
  double max_dev = 0.0;
  for (size_t i = 0; i < t_exact.states.size(); ++i)
    max_dev = std::max(max_dev, (t_exact.states[i].q - t_hnn.states[i].q).norm());

  rep.metrics["acceptance_rate"] = static_cast<double>(accepted) / n_samples;
  rep.metrics["mean_q1"] = mean[0];
  rep.metrics["mean_q2"] = mean[1];
  rep.metrics["cov_q1q1"] = c11;
  rep.metrics["cov_q2q2"] = c22;
  rep.metrics["cov_q1q2"] = c12;
  rep.metrics["trajectory_max_deviation"] = max_dev;
  rep.sampling_seconds = seconds_since(t0);
  rep.config_echo = cfg.raw.dump(2);
  return rep;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentSetup setup = build_setup(cfg.raw);
  const std::string id = cfg.experiment();
  if (id == "bimodal-demo") return run_bimodal_demo(cfg, setup);
  if (id == "corr-gauss-2d-demo") return run_corr_gauss_demo(cfg, setup);

  RunReport rep;
  rep.experiment_id = id;
  rep.config_echo = cfg.raw.dump(2);

  HnnModel model;
  TrainingDataset base_data;
  if (setup.needs_model) {
    double train_s = 0.0;
    const bool retraining = setup.subset.sampler_cfg.retrain_enabled ||
                            setup.subset.sampler_cfg.monitoring_enabled;
    model = prepare_model(cfg.raw, setup, rep.training_ledger, train_s,
                          retraining ? &base_data : nullptr);
    rep.train_seconds = train_s;
    if (retraining && base_data.size() > 0) setup.subset.base_training_data = &base_data;
    setup.subset.retrain_train_cfg = train_cfg_from_json(cfg.raw);
  }

  const auto t0 = clock_t_::now();
  const int n_trials = cfg.raw.value("n_trials", 10);
  const std::uint64_t master = cfg.raw.value("master_seed", 1);
  const HnnModel* model_ptr = setup.needs_model ? &model : nullptr;
  // Model-run deltas are read per trial from a shared counter, so experiments
  // with a forward model parallelize across chains instead of trials.
  const bool parallel_trials =
      cfg.raw.value("parallel_trials", !setup.subset.model_run_counter);
  SubsetConfig sc = setup.subset;
  if (parallel_trials && n_trials > 1) sc.parallel_chains = false;  // one level of parallelism

  rep.stats = run_trials(
      [&](std::uint64_t seed) {
        return run_subset_simulation(setup.target, setup.limit_state, sc, seed, model_ptr);
      },
      n_trials, master, parallel_trials);
  rep.sampling_seconds = seconds_since(t0);

  if (id == "boucwen-bayes") {
    // posterior-mode recovery metric from a dedicated sampling pass
    const json tgt = cfg.raw["target"];
    const int n_post = tgt.value("posterior_samples", 3000);
    HamiltonianSystem sys{setup.target, 1.0};
    HnnmcConfig hcfg = setup.subset.sampler_cfg;
    Rng rng(derive_seed(master, 0xB0C4E));
    Vec q = Vec::Ones(4);  // scaled units: nominal magnitudes
    double logd = setup.target.log_density(q);
    Vec best_q = q;
    double best_logd = logd;
    long accepted = 0;
    for (int i = 0; i < n_post; ++i) {
      HnnmcProposal prop = hnnmc_propose(sys, model, q, hcfg, rng, logd);
      if (prop.accepted) {
        q = prop.q;
        logd = prop.log_density_end;
        accepted++;
        if (logd > best_logd) {
          best_logd = logd;
          best_q = q;
        }
      }
    }
    BoucWenParams mode = setup.boucwen->params_from_scaled(best_q);
    rep.metrics["posterior_acceptance"] = static_cast<double>(accepted) / n_post;
    rep.metrics["posterior_mode_k"] = mode.k;
    rep.metrics["posterior_mode_r0"] = mode.r0;
    rep.metrics["posterior_mode_delta"] = mode.delta;
    rep.metrics["posterior_mode_n"] = mode.n;
  }
  return rep;
}

}  // namespace hnnmc
