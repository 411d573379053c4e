#pragma once

#include <map>
#include <string>

#include "hnnmc/subsetsim.hpp"

namespace hnnmc {

/// Everything a finished experiment reports. Statistical outputs are
/// byte-reproducible from (config, seed); wall-clock numbers go to a separate
/// file so the reproducible artifacts stay byte-identical across reruns.
struct RunReport {
  std::string experiment_id;
  TrialStats stats;
  EvalLedger training_ledger;             // one-time cost of building the model
  double train_seconds = 0.0;
  double sampling_seconds = 0.0;
  std::map<std::string, double> metrics;  // demo-experiment headline numbers
  std::string config_echo;                // JSON the run was configured from
};

/// Writes trials.csv, summary.csv, ledger.csv, timings.csv, config.json and,
/// for two-dimensional problems with stored samples, a per-level scatter SVG.
void emit_report(const RunReport& report, const std::string& dir);

/// Aggregates recomputed from a trials.csv (summary verification path).
struct TrialsAggregate {
  int n_trials = 0;
  int n_censored = 0;
  double mean_beta = 0.0;
  double var_beta = 0.0;
  double cv_beta = 0.0;
};
TrialsAggregate aggregate_trials_csv(const std::string& trials_csv_path);

/// Static SVG scatter of per-level samples (first two coordinates).
void write_level_scatter_svg(const std::vector<SubsetLevel>& levels, const std::string& path,
                             const std::string& title);

std::string format_double(double v);  // shortest round-trip-stable decimal

}  // namespace hnnmc
