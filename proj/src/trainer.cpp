#include "cadad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cadad/csv.hpp"
#include "cadad/diagnostics.hpp"
#include "cadad/rng.hpp"

namespace cadad {

OptimizerState OptimizerState::for_network(const Network& net) {
  OptimizerState st;
  for (const auto& w : net.params.weights)
    st.weights.push_back({std::vector<double>(w.size(), 0.0), std::vector<double>(w.size(), 0.0)});
  for (const auto& d : net.params.delays)
    st.delays.push_back(
        {std::vector<double>(d.channels(), 0.0), std::vector<double>(d.channels(), 0.0)});
  return st;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               long step, double lr, double weight_decay, const AdamHyper& hyper) {
  require(params.size() == grads.size(), "adam_step: parameter/gradient size mismatch");
  require(step >= 1, "adam_step: step counter starts at 1");
  if (moments.m.size() != params.size()) moments.m.assign(params.size(), 0.0);
  if (moments.v.size() != params.size()) moments.v.assign(params.size(), 0.0);
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");

  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    moments.m[i] = hyper.beta1 * moments.m[i] + (1.0 - hyper.beta1) * g;
    moments.v[i] = hyper.beta2 * moments.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = moments.m[i] / bc1;
    const double v_hat = moments.v[i] / bc2;
    if (weight_decay != 0.0) params[i] -= lr * weight_decay * params[i];
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

void apply_gradients(Network& net, const Gradients& grads, OptimizerState& state, double lr_w,
                     double lr_delay, double weight_decay, const AdamHyper& hyper) {
  ++state.step;
  for (std::size_t l = 0; l < net.params.weights.size(); ++l)
    adam_step(net.params.weights[l].flat(), grads.weights[l].flat(), state.weights[l], state.step,
              lr_w, weight_decay, hyper);
  for (std::size_t l = 0; l < net.params.delays.size(); ++l) {
    if (net.spec.layers[l].delay_mode == DelayMode::none) continue;
    auto& d = net.params.delays[l];
    adam_step(d.d_base, grads.d_base[l], state.delays[l], state.step, lr_delay, 0.0, hyper);
    d.project(net.delay.d_max);
  }
}

double onecycle_lr(long step, long total_steps, double lr_max, const OneCycleShape& shape) {
  require(total_steps >= 1 && step >= 0 && step < total_steps, "onecycle_lr: step out of range");
  const double start = lr_max / shape.start_div;
  const double end = lr_max / shape.final_div;
  const double last = static_cast<double>(total_steps - 1);
  const double peak = shape.warmup_fraction * last;
  const double s = static_cast<double>(step);
  if (s <= peak) {
    if (peak == 0.0) return lr_max;
    return start + (lr_max - start) * (1.0 - std::cos(std::numbers::pi * s / peak)) / 2.0;
  }
  return end + (lr_max - end) * (1.0 + std::cos(std::numbers::pi * (s - peak) / (last - peak))) / 2.0;
}

double cosine_delay_lr(int epoch, int epochs, double lr0) {
  require(epochs >= 1 && epoch >= 0 && epoch < epochs, "cosine_delay_lr: epoch out of range");
  return lr0 * (1.0 + std::cos(std::numbers::pi * epoch / epochs)) / 2.0;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(lr_w > 0.0)) throw ConfigError("train.lr_w must be positive");
  if (!(lr_delay > 0.0)) throw ConfigError("train.lr_delay must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (!(onecycle.warmup_fraction >= 0.0 && onecycle.warmup_fraction < 1.0))
    throw ConfigError("train.onecycle_warmup must lie in [0, 1)");
  if (!(onecycle.start_div > 0.0 && onecycle.final_div > 0.0))
    throw ConfigError("train.onecycle divisors must be positive");
}

std::string train_log_header(std::size_t hidden_layers) {
  CsvWriter w;
  w.field("epoch").field("split").field("loss").field("accuracy").field("S_e").field("lr_w")
      .field("lr_delay").field("mean_abs_d_shift");
  for (std::size_t l = 0; l < hidden_layers; ++l) w.field("u_layer" + std::to_string(l));
  w.end_row();
  return w.str();
}

std::string train_log_line(const TrainLogRow& row, std::size_t hidden_layers) {
  CsvWriter w;
  w.field(row.epoch).field(row.split).field(row.loss).field(row.accuracy).field(row.scale)
      .field(row.lr_w).field(row.lr_delay).field(row.mean_abs_d_shift);
  for (std::size_t l = 0; l < hidden_layers; ++l) {
    if (l < row.layer_u.size())
      w.field(row.layer_u[l]);
    else
      w.empty_field();
  }
  w.end_row();
  return w.str();
}

double mean_abs_shift(const Network& net, const ForwardResult& fwd) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& sc : fwd.samples) {
    for (std::size_t l = 0; l < net.spec.layers.size(); ++l) {
      if (net.spec.layers[l].delay_mode != DelayMode::dynamic) continue;
      for (double d : sc.layers[l].trace.d_shift) sum += std::abs(d);
      n += sc.layers[l].trace.d_shift.size();
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

namespace {

SpikeTensor gather(const Dataset& ds, std::span<const std::size_t> idx, std::vector<int>& labels) {
  SpikeTensor batch;
  labels.clear();
  for (auto i : idx) {
    batch.push_back(ds.samples[i]);
    labels.push_back(ds.labels[i]);
  }
  return batch;
}

}  // namespace

EvalResult evaluate(const Network& net, const Dataset& data, const ForwardOptions& opts,
                    std::size_t batch_size) {
  require(!data.empty(), "evaluate: empty dataset");
  EvalResult res;
  const auto k = net.spec.n_classes;
  res.confusion.assign(k, std::vector<std::size_t>(k, 0));
  res.scores = RealMatrix(data.size(), k);
  res.layer_u.assign(net.spec.hidden_layers(), 0.0);
  std::size_t correct = 0;
  double shift_sum = 0.0;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> labels;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const auto end = std::min(data.size(), start + batch_size);
    const auto batch = gather(data, std::span(idx).subspan(start, end - start), labels);
    const auto fwd = network_forward(net, batch, opts);
    const auto loss = softmax_cross_entropy(fwd.scores, labels);
    res.loss += loss.loss * static_cast<double>(end - start);
    correct += loss.correct;
    shift_sum += mean_abs_shift(net, fwd) * static_cast<double>(end - start);
    const auto dyn = dynamics_from_forward(net, fwd);
    for (std::size_t l = 0; l < dyn.layers.size(); ++l) res.layer_u[l] += dyn.layers[l].u;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto pred = argmax_row(fwd.scores, b);
      ++res.confusion[static_cast<std::size_t>(labels[b])][pred];
      for (std::size_t c = 0; c < k; ++c) res.scores(start + b, c) = fwd.scores(b, c);
    }
  }
  const auto n = static_cast<double>(data.size());
  res.loss /= n;
  res.accuracy = static_cast<double>(correct) / n;
  res.mean_abs_d_shift = shift_sum / n;
  return res;
}

TrainResult train(const Dataset& train_set, const Dataset& eval_set, Network net,
                  const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  require(!train_set.empty(), "train: empty training set");
  TrainResult res;
  res.best = net;
  if (cfg.epochs == 0) {
    res.final_net = std::move(net);
    return res;
  }

  const auto n = train_set.size();
  const auto batches = static_cast<long>((n + cfg.batch_size - 1) / cfg.batch_size);
  const long total_steps = batches * cfg.epochs;
  const auto& dc = net.delay;
  OptimizerState opt = OptimizerState::for_network(net);
  long step = 0;
  res.best_accuracy = -1.0;

  auto log = [&](TrainLogRow row) {
    if (hooks.on_log) hooks.on_log(row);
    res.log.push_back(std::move(row));
  };

  std::vector<std::size_t> order(n);
  std::vector<int> labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order.begin(), order.end());

    const double lr_delay = cosine_delay_lr(epoch, cfg.epochs, cfg.lr_delay);
    const double scale = anneal_scale(epoch, dc.s_max, dc.s_min, dc.e_decay);
    double lr_w = 0.0;
    double loss_sum = 0.0;
    double shift_sum = 0.0;
    std::size_t correct = 0;

    for (long b = 0; b < batches; ++b) {
      const auto start = static_cast<std::size_t>(b) * cfg.batch_size;
      const auto end = std::min(n, start + cfg.batch_size);
      const auto batch = gather(train_set, std::span(order).subspan(start, end - start), labels);

      ForwardOptions fo;
      fo.epoch = epoch;
      fo.training = true;
      fo.dropout_seed = derive_seed(cfg.seed, "dropout", static_cast<std::uint64_t>(step));
      const auto fwd = network_forward(net, batch, fo);
      const auto loss = softmax_cross_entropy(fwd.scores, labels);
      if (!std::isfinite(loss.loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));

      auto grads = network_backward(net, fwd, loss.grad);
      if (cfg.grad_clip > 0.0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (!std::isfinite(norm)) throw NumericError("train: non-finite gradient norm");
        if (norm > cfg.grad_clip) grads.scale(cfg.grad_clip / norm);
      }
      lr_w = onecycle_lr(step, total_steps, cfg.lr_w, cfg.onecycle);
      apply_gradients(net, grads, opt, lr_w, lr_delay, cfg.weight_decay);
      ++step;

      const auto count = static_cast<double>(end - start);
      loss_sum += loss.loss * count;
      correct += loss.correct;
      shift_sum += mean_abs_shift(net, fwd) * count;
    }

    TrainLogRow tr{epoch, "train", loss_sum / static_cast<double>(n),
                   static_cast<double>(correct) / static_cast<double>(n), scale, lr_w, lr_delay,
                   shift_sum / static_cast<double>(n), {}};
    double select = tr.accuracy;
    log(tr);

    const bool last = epoch + 1 == cfg.epochs;
    if (!eval_set.empty() && ((epoch + 1) % cfg.eval_every == 0 || last)) {
      ForwardOptions eo;
      eo.epoch = epoch;
      eo.discretize_delays = cfg.discretize_eval;
      const auto ev = evaluate(net, eval_set, eo, cfg.batch_size);
      log({epoch, "eval", ev.loss, ev.accuracy, scale, lr_w, lr_delay, ev.mean_abs_d_shift,
           ev.layer_u});
      if (cfg.select_on == SelectSplit::eval) select = ev.accuracy;
    } else if (cfg.select_on == SelectSplit::eval && !eval_set.empty()) {
      continue;
    }

    if (select > res.best_accuracy) {
      res.best_accuracy = select;
      res.best_epoch = epoch;
      res.best = net;
      if (hooks.on_best) hooks.on_best(net, epoch);
    }
  }
  res.final_net = std::move(net);
  return res;
}

}  // namespace cadad
