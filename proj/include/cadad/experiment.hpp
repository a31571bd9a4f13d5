#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cadad/config.hpp"
#include "cadad/diagnostics.hpp"
#include "cadad/trainer.hpp"

namespace cadad {

struct DataSplits {
  Dataset train;
  Dataset eval;
  std::size_t channels = 0;
};

// Synthetic task or event files, binned with cfg.binning.
DataSplits build_datasets(const RunConfig& cfg, const WarningSink& warn = {});

Network build_network(const RunConfig& cfg, std::size_t channels, std::size_t n_classes,
                      DelayMode mode, std::uint64_t seed);

struct RunSummary {
  DelayMode mode = DelayMode::dynamic;
  std::uint64_t seed = 0;
  TrainResult result;
  double eval_accuracy = 0.0;             // best checkpoint, integer delays
  double eval_accuracy_continuous = 0.0;  // best checkpoint, interpolated delays
  DynamicsReport dynamics;                // best checkpoint over the eval split
  double seconds = 0.0;
};

// Trains one network in `mode` with master seed `seed` (network init, shuffling
// and dropout all derive from it) on shared data.
RunSummary run_single(const RunConfig& cfg, const DataSplits& data, DelayMode mode,
                      std::uint64_t seed, const TrainHooks& hooks = {});

struct AblationRow {
  DelayMode mode = DelayMode::none;
  std::size_t params = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double mean_continuous = 0.0;
};

// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_std(const std::vector<double>& xs);

std::vector<AblationRow> summarize_ablation(const std::vector<RunSummary>& runs);

// method,params,accuracy_mean,accuracy_std,accuracy_continuous_mean,n_seeds
std::string ablation_table_csv(const std::vector<AblationRow>& rows, std::size_t n_seeds);

// One line per run: mode,seed,best_epoch,accuracy,accuracy_continuous,u_sum,
// overflow_sum,spikes_sum,overflow_per_spike,seconds
std::string ablation_runs_csv(const std::vector<RunSummary>& runs);

}  // namespace cadad
