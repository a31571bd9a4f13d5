#include "cadad/experiment.hpp"

#include <chrono>
#include <cmath>

#include "cadad/csv.hpp"
#include "cadad/errors.hpp"
#include "cadad/rng.hpp"

namespace cadad {

DataSplits build_datasets(const RunConfig& cfg, const WarningSink& warn) {
  DataSplits out;
  EventFile train_file;
  EventFile eval_file;
  if (cfg.source == DataSource::synth) {
    auto task = synth_coincidence_task(cfg.synth);
    train_file = std::move(task.train);
    eval_file = std::move(task.eval);
  } else {
    train_file = load_event_file(cfg.train_path, warn);
    if (!cfg.eval_path.empty()) {
      eval_file = load_event_file(cfg.eval_path, warn);
      if (eval_file.channels != train_file.channels || eval_file.classes != train_file.classes)
        throw ConfigError("data.eval_path: channel/class counts differ from the training file");
    }
  }
  BinningConfig bc = cfg.binning;
  bc.channels = train_file.channels;
  out.channels = bc.channels;
  out.train = bin_dataset(train_file, bc);
  if (!eval_file.streams.empty() || cfg.source == DataSource::synth)
    out.eval = bin_dataset(eval_file, bc);
  out.eval.n_classes = out.train.n_classes;
  return out;
}

Network build_network(const RunConfig& cfg, std::size_t channels, std::size_t n_classes,
                      DelayMode mode, std::uint64_t seed) {
  auto spec = NetworkSpec::feedforward(channels, cfg.hidden, n_classes, mode, cfg.dropout,
                                       cfg.readout);
  DelayConfig dc = cfg.delay;
  dc.mode = mode;
  return Network::initialize(std::move(spec), cfg.neuron, dc, derive_seed(seed, "init"),
                             cfg.init_gain);
}

RunSummary run_single(const RunConfig& cfg, const DataSplits& data, DelayMode mode,
                      std::uint64_t seed, const TrainHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  RunSummary s;
  s.mode = mode;
  s.seed = seed;
  auto net = build_network(cfg, data.channels, data.train.n_classes, mode, seed);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, "train");
  s.result = train(data.train, data.eval, std::move(net), tc, hooks);

  const Dataset& eval_set = data.eval.empty() ? data.train : data.eval;
  ForwardOptions eo;
  eo.epoch = std::max(0, s.result.best_epoch);
  eo.discretize_delays = true;
  s.eval_accuracy = evaluate(s.result.best, eval_set, eo, tc.batch_size).accuracy;
  s.dynamics = dynamics_report(s.result.best, eval_set, eo, tc.batch_size);
  eo.discretize_delays = false;
  s.eval_accuracy_continuous = evaluate(s.result.best, eval_set, eo, tc.batch_size).accuracy;
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::vector<AblationRow> summarize_ablation(const std::vector<RunSummary>& runs) {
  std::vector<AblationRow> rows;
  for (auto mode : {DelayMode::none, DelayMode::fixed, DelayMode::dynamic}) {
    std::vector<double> acc;
    std::vector<double> cont;
    AblationRow row;
    row.mode = mode;
    for (const auto& r : runs) {
      if (r.mode != mode) continue;
      acc.push_back(r.eval_accuracy);
      cont.push_back(r.eval_accuracy_continuous);
      row.params = r.result.best.weight_count() + r.result.best.delay_parameter_count();
    }
    if (acc.empty()) continue;
    std::tie(row.mean, row.stddev) = mean_std(acc);
    row.mean_continuous = mean_std(cont).first;
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_table_csv(const std::vector<AblationRow>& rows, std::size_t n_seeds) {
  CsvWriter w;
  for (auto h : {"method", "params", "accuracy_mean", "accuracy_std", "accuracy_continuous_mean",
                 "n_seeds"})
    w.field(std::string_view(h));
  w.end_row();
  for (const auto& r : rows) {
    w.field(to_string(r.mode));
    w.field(r.params);
    w.field(r.mean);
    w.field(r.stddev);
    w.field(r.mean_continuous);
    w.field(n_seeds);
    w.end_row();
  }
  return w.str();
}

std::string ablation_runs_csv(const std::vector<RunSummary>& runs) {
  CsvWriter w;
  for (auto h : {"mode", "seed", "best_epoch", "accuracy", "accuracy_continuous", "u_sum",
                 "overflow_sum", "spikes_sum", "overflow_per_spike", "seconds"})
    w.field(std::string_view(h));
  w.end_row();
  for (const auto& r : runs) {
    w.field(to_string(r.mode));
    w.field(r.seed);
    w.field(r.result.best_epoch);
    w.field(r.eval_accuracy);
    w.field(r.eval_accuracy_continuous);
    w.field(r.dynamics.total.u);
    w.field(r.dynamics.total.overflow);
    w.field(r.dynamics.total.spike_count);
    w.field(r.dynamics.total.overflow_per_spike);
    w.field(r.seconds);
    w.end_row();
  }
  return w.str();
}

}  // namespace cadad
