#pragma once

#include <json.hpp>

#include "hnnmc/report.hpp"
#include "hnnmc/structmodels.hpp"

namespace hnnmc {

using json = nlohmann::json;

/// A fully serialized experiment description; a run is reproducible from
/// (config, code version). `raw` is the merged JSON the run executes.
struct ExperimentConfig {
  json raw;
  std::string experiment() const { return raw.value("experiment", ""); }
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_json(json j);
};

/// All violations, not just the first; empty means valid.
std::vector<std::string> validate_config(const json& cfg);

struct PresetInfo {
  std::string id;
  std::string description;
};
std::vector<PresetInfo> list_presets();

/// Shipped preset, optionally at desk scale (fewer trials, smaller budgets).
json preset_config(const std::string& id, bool desk);

/// Assembled problem pieces for one experiment configuration.
struct ExperimentSetup {
  TargetDistribution target;
  LimitState limit_state;
  SubsetConfig subset;
  bool needs_model = false;
  int latent_dim = 1;
  std::shared_ptr<BoucWenProblem> boucwen;  // set for the inference experiment
  std::shared_ptr<WhiteNoiseSynthesizer> white_noise;
};
ExperimentSetup build_setup(const json& cfg);

/// Trains the network for `cfg` (or loads it when model_path is set), tracking
/// exact-gradient cost and wall time.
HnnModel prepare_model(const json& cfg, const ExperimentSetup& setup, EvalLedger& ledger,
                       double& seconds, TrainingDataset* keep_data = nullptr);

/// Runs the whole experiment: model preparation once, then n_trials Subset
/// Simulations reusing the trained model; demos run their sampling studies.
/// Writes nothing; pair with emit_report.
RunReport run_experiment(const ExperimentConfig& cfg);

}  // namespace hnnmc
