// Command-line front end: train models, run experiments, regenerate reports.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "hnnmc/harness.hpp"

using namespace hnnmc;

namespace {

int fail_json(const std::string& kind, const std::string& msg) {
  json err{{"error", kind}, {"detail", msg}};
  std::cerr << err.dump() << "\n";
  return kind == "invalid-config" ? 2 : 1;
}

json load_cfg(const std::string& preset, const std::string& config_file, bool desk) {
  json cfg;
  if (!config_file.empty()) {
    std::ifstream is(config_file);
    if (!is) throw std::runtime_error("cannot open config file " + config_file);
    cfg = json::parse(is, nullptr, true, true);
    if (desk) cfg.merge_patch(json::parse(R"({"n_trials": 10})"));
  } else {
    cfg = preset_config(preset, desk);
  }
  return cfg;
}

void apply_overrides(json& cfg, std::int64_t seed, int trials, const std::string& out,
                     const std::string& model, bool no_parallel) {
  if (seed >= 0) cfg["master_seed"] = seed;
  if (trials > 0) cfg["n_trials"] = trials;
  if (!out.empty()) cfg["output_dir"] = out;
  if (!model.empty()) cfg["model_path"] = model;
  if (no_parallel) {
    cfg["parallel_trials"] = false;
    cfg["subset"]["parallel"] = false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subset Simulation reliability toolkit with learned Hamiltonian gradients"};
  app.require_subcommand(1);

  std::string preset, config_file, out_dir, model_path, export_data, report_dir;
  std::int64_t seed = -1;
  int trials = 0;
  bool desk = false, no_parallel = false;

  auto add_common = [&](CLI::App* cmd, bool with_run_flags) {
    cmd->add_option("-p,--preset", preset, "preset id (see list-presets)");
    cmd->add_option("-c,--config", config_file, "experiment config JSON file");
    cmd->add_flag("--desk", desk, "desk-scale variant (fewer trials, smaller budgets)");
    if (with_run_flags) {
      cmd->add_option("-s,--seed", seed, "override master seed");
      cmd->add_option("-t,--trials", trials, "override trial count");
      cmd->add_option("-o,--out", out_dir, "override output directory");
      cmd->add_option("-m,--model", model_path, "model file to load/save");
      cmd->add_flag("--no-parallel", no_parallel, "disable OpenMP parallel execution");
    }
  };

  CLI::App* cmd_list = app.add_subcommand("list-presets", "list shipped experiment presets");
  CLI::App* cmd_validate =
      app.add_subcommand("validate-config", "validate a config file; lists every violation");
  cmd_validate->add_option("file", config_file, "config JSON file")->required();
  CLI::App* cmd_train = app.add_subcommand("train", "train a model for an experiment");
  add_common(cmd_train, true);
  cmd_train->add_option("--export-data", export_data, "also export the training set as CSV");
  CLI::App* cmd_run = app.add_subcommand("run", "run an experiment and emit its report");
  add_common(cmd_run, true);
  CLI::App* cmd_report =
      app.add_subcommand("report", "recompute aggregates from a run directory's trials.csv");
  cmd_report->add_option("dir", report_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_list->parsed()) {
      for (const auto& p : list_presets()) std::printf("%-22s %s\n", p.id.c_str(),
                                                       p.description.c_str());
      return 0;
    }
    if (cmd_validate->parsed()) {
      std::ifstream is(config_file);
      if (!is) return fail_json("io", "cannot open " + config_file);
      json cfg = json::parse(is, nullptr, true, true);
      auto errors = validate_config(cfg);
      if (errors.empty()) {
        std::printf("ok\n");
        return 0;
      }
      json err{{"error", "invalid-config"}, {"violations", errors}};
      std::cerr << err.dump(2) << "\n";
      return 2;
    }
    if (cmd_train->parsed()) {
      json cfg = load_cfg(preset, config_file, desk);
      apply_overrides(cfg, seed, trials, out_dir, model_path, no_parallel);
      if (cfg.value("model_path", std::string{}).empty())
        return fail_json("usage", "train needs --model to know where to save");
      cfg["model_load"] = false;  // force a fresh fit
      ExperimentConfig ecfg = ExperimentConfig::from_json(cfg);
      ExperimentSetup setup = build_setup(ecfg.raw);
      EvalLedger ledger;
      double secs = 0.0;
      TrainingDataset data;
      HnnModel model = prepare_model(ecfg.raw, setup, ledger, secs, &data);
      if (!export_data.empty() && data.size() > 0) export_dataset_csv(data, export_data);
      std::printf("trained %s: %d pairs, %.1f s, exact gradients %lld -> %s\n",
                  ecfg.experiment().c_str(), data.size(), secs,
                  static_cast<long long>(ledger.exact_grad_training),
                  cfg["model_path"].get<std::string>().c_str());
      return 0;
    }
    if (cmd_run->parsed()) {
      json cfg = load_cfg(preset, config_file, desk);
      apply_overrides(cfg, seed, trials, out_dir, model_path, no_parallel);
      ExperimentConfig ecfg = ExperimentConfig::from_json(cfg);
      RunReport rep = run_experiment(ecfg);
      const std::string dir = ecfg.raw.value("output_dir", "out/" + ecfg.experiment());
      emit_report(rep, dir);
      if (!rep.stats.trials.empty()) {
        std::printf("%s: %zu trials (%d censored)  mean beta %.4f  cv %.4f  -> %s\n",
                    rep.experiment_id.c_str(), rep.stats.trials.size(), rep.stats.n_censored,
                    rep.stats.mean_beta, rep.stats.cv_beta, dir.c_str());
      } else {
        std::printf("%s: demo metrics -> %s\n", rep.experiment_id.c_str(), dir.c_str());
        for (const auto& [k, v] : rep.metrics) std::printf("  %-28s %.6g\n", k.c_str(), v);
      }
      return 0;
    }
    if (cmd_report->parsed()) {
      TrialsAggregate agg = aggregate_trials_csv(report_dir + "/trials.csv");
      std::printf("trials %d (censored %d)\n", agg.n_trials, agg.n_censored);
      std::printf("mean_beta %.17g\nvar_beta %.17g\ncv_beta %.17g\n", agg.mean_beta, agg.var_beta,
                  agg.cv_beta);
      return 0;
    }
  } catch (const InvalidArgument& e) {
    return fail_json("invalid-config", e.what());
  } catch (const std::exception& e) {
    return fail_json("runtime", e.what());
  }
  return 0;
}
