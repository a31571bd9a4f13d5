#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cadad/data.hpp"
#include "cadad/network.hpp"

namespace cadad {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments for one parameter tensor.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

// Optimizer state for a network: one moment pair per weight matrix and per
// delay vector, plus the shared step counter.
struct OptimizerState {
  std::vector<AdamMoments> weights;
  std::vector<AdamMoments> delays;
  long step = 0;

  static OptimizerState for_network(const Network& net);
};

// One Adam update of `params` in place with bias correction for step `step`
// (1-based). weight_decay is decoupled: params -= lr * weight_decay * params.
// Throws NumericError on non-finite gradients.
void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               long step, double lr, double weight_decay, const AdamHyper& hyper = {});

// Applies one optimizer step to the whole network. Weight decay reaches the
// weights only; base delays are projected back into [0, d_max] afterwards.
// Layers without delays keep their base delays untouched.
void apply_gradients(Network& net, const Gradients& grads, OptimizerState& state, double lr_w,
                     double lr_delay, double weight_decay, const AdamHyper& hyper = {});

struct OneCycleShape {
  double warmup_fraction = 0.3;
  double start_div = 25.0;   // first lr = lr_max / start_div
  double final_div = 1e4;    // last lr = lr_max / final_div
};

// Cosine warmup to lr_max over the first warmup_fraction of the steps, then
// cosine decay to lr_max / final_div at step total_steps - 1.
double onecycle_lr(long step, long total_steps, double lr_max, const OneCycleShape& shape = {});

// lr0 * (1 + cos(pi * epoch / epochs)) / 2
double cosine_delay_lr(int epoch, int epochs, double lr0);

// Which split picks the best checkpoint.
enum class SelectSplit { eval, train };

struct TrainConfig {
  int epochs = 20;
  std::size_t batch_size = 32;
  double lr_w = 1e-3;
  double lr_delay = 1e-1;
  double weight_decay = 1e-5;
  std::uint64_t seed = 0;
  int eval_every = 1;
  double grad_clip = 10.0;  // global-norm clip; <= 0 disables
  OneCycleShape onecycle;
  bool discretize_eval = true;
  SelectSplit select_on = SelectSplit::eval;

  void validate() const;
};

struct TrainLogRow {
  int epoch = 0;
  std::string split;  // "train" or "eval"
  double loss = 0.0;
  double accuracy = 0.0;
  double scale = 0.0;  // S(e)
  double lr_w = 0.0;
  double lr_delay = 0.0;
  double mean_abs_d_shift = 0.0;
  std::vector<double> layer_u;  // hidden layers; eval rows only
};

std::string train_log_header(std::size_t hidden_layers);
std::string train_log_line(const TrainLogRow& row, std::size_t hidden_layers);

struct TrainHooks {
  std::function<void(const TrainLogRow&)> on_log;
  std::function<void(const Network&, int epoch)> on_best;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  Network best;
  Network final_net;
  int best_epoch = -1;
  double best_accuracy = 0.0;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  RealMatrix scores;
  double mean_abs_d_shift = 0.0;
  std::vector<double> layer_u;
};

EvalResult evaluate(const Network& net, const Dataset& data, const ForwardOptions& opts,
                    std::size_t batch_size = 64);

// Mean |d_shift| over dynamic layers, samples and steps (0 without any).
double mean_abs_shift(const Network& net, const ForwardResult& fwd);

// Throws NumericError on a non-finite loss; checkpoints already handed to
// on_best stay valid.
TrainResult train(const Dataset& train_set, const Dataset& eval_set, Network net,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace cadad
