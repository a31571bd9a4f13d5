#include "cadad/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cadad/rng.hpp"

namespace cadad {

Readout parse_readout(std::string_view name) {
  if (name == "mean_membrane") return Readout::mean_membrane;
  if (name == "max_membrane") return Readout::max_membrane;
  if (name == "spike_count") return Readout::spike_count;
  throw ConfigError("unknown readout '" + std::string(name) + "'");
}

std::string_view to_string(Readout r) {
  switch (r) {
    case Readout::mean_membrane: return "mean_membrane";
    case Readout::max_membrane: return "max_membrane";
    case Readout::spike_count: return "spike_count";
  }
  return "?";
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw ConfigError("network needs at least the readout layer");
  if (n_classes == 0) throw ConfigError("network n_classes must be positive");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& spec = layers[l];
    if (spec.n_in == 0 || spec.n_out == 0) throw ConfigError("layer sizes must be positive");
    if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0))
      throw ConfigError("dropout rate must lie in [0, 1)");
    if (l + 1 < layers.size() && layers[l + 1].n_in != spec.n_out)
      throw ConfigError("layer " + std::to_string(l) + " output size does not match layer " +
                        std::to_string(l + 1) + " input size");
  }
  if (layers.back().n_out != n_classes)
    throw ConfigError("readout layer width must equal n_classes");
}

NetworkSpec NetworkSpec::feedforward(std::size_t n_in, std::span<const std::size_t> hidden,
                                     std::size_t n_classes, DelayMode mode, double dropout,
                                     Readout readout) {
  NetworkSpec spec;
  spec.readout = readout;
  spec.n_classes = n_classes;
  std::size_t prev = n_in;
  for (auto width : hidden) {
    spec.layers.push_back({prev, width, mode, dropout});
    prev = width;
  }
  spec.layers.push_back({prev, n_classes, mode, dropout});
  spec.validate();
  return spec;
}

Network Network::initialize(NetworkSpec spec, NeuronConfig neuron, DelayConfig delay,
                            std::uint64_t seed, double init_gain) {
  spec.validate();
  neuron.validate();
  delay.validate();
  Network net{std::move(spec), neuron, delay, {}};
  Rng weight_rng(derive_seed(seed, "init.weights"));
  Rng delay_rng(derive_seed(seed, "init.delays"));
  for (const auto& layer : net.spec.layers) {
    RealMatrix w(layer.n_in, layer.n_out);
    const double bound = init_gain * std::sqrt(3.0 / static_cast<double>(layer.n_in));
    for (auto& x : w.flat()) x = weight_rng.uniform(-bound, bound);
    net.params.weights.push_back(std::move(w));

    DelayParams d{std::vector<double>(layer.n_in, 0.0)};
    if (layer.delay_mode != DelayMode::none)
      for (auto& x : d.d_base) x = delay_rng.uniform(0.0, 0.5 * delay.d_max);
    net.params.delays.push_back(std::move(d));
  }
  return net;
}

std::size_t Network::weight_count() const {
  std::size_t n = 0;
  for (const auto& w : params.weights) n += w.size();
  return n;
}

std::size_t Network::delay_parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < spec.layers.size(); ++l)
    if (spec.layers[l].delay_mode != DelayMode::none) n += params.delays[l].channels();
  return n;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const auto& w : net.params.weights) g.weights.emplace_back(w.rows(), w.cols());
  for (const auto& d : net.params.delays) g.d_base.emplace_back(d.channels(), 0.0);
  return g;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights)
    for (double x : w.flat()) s += x * x;
  for (const auto& d : d_base)
    for (double x : d) s += x * x;
  return s;
}

void Gradients::scale(double factor) {
  for (auto& w : weights)
    for (double& x : w.flat()) x *= factor;
  for (auto& d : d_base)
    for (double& x : d) x *= factor;
}

LayerOutput layer_forward(const RealMatrix& spikes_in, const RealMatrix& weights,
                          const DelayParams& delay, const LayerSpec& spec,
                          const DelayConfig& delay_cfg, const NeuronConfig& neuron,
                          const ForwardOptions& opts, std::uint64_t dropout_stream,
                          bool spiking) {
  require(spikes_in.cols() == spec.n_in, "layer_forward: input channels differ from n_in");
  require(weights.rows() == spec.n_in && weights.cols() == spec.n_out,
          "layer_forward: weight shape mismatch");
  require(delay.channels() == spec.n_in, "layer_forward: delay channels differ from n_in");

  const auto steps = spikes_in.rows();
  LayerOutput out;
  auto& c = out.cache;
  c.input = spikes_in;

  DelayConfig cfg = delay_cfg;
  cfg.mode = spec.delay_mode;
  c.trace = build_trace(spikes_in, delay.d_base, cfg, opts.epoch,
                        opts.discretize_delays && !opts.training);
  c.delayed = spec.delay_mode == DelayMode::none ? spikes_in : delayed_read(spikes_in, c.trace);

  if (opts.training && spec.dropout_rate > 0.0) {
    Rng rng(dropout_stream);
    const double keep_scale = 1.0 / (1.0 - spec.dropout_rate);
    c.mask = RealMatrix(steps, spec.n_in);
    for (std::size_t i = 0; i < c.mask.size(); ++i) {
      const double m = rng.bernoulli(spec.dropout_rate) ? 0.0 : keep_scale;
      c.mask.flat()[i] = m;
      c.delayed.flat()[i] *= m;
    }
  }

  c.current = RealMatrix(steps, spec.n_out);
  for (std::size_t t = 0; t < steps; ++t) {
    auto cur = c.current.row(t);
    const auto x = c.delayed.row(t);
    for (std::size_t j = 0; j < spec.n_in; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const auto w = weights.row(j);
      for (std::size_t i = 0; i < spec.n_out; ++i) cur[i] += xj * w[i];
    }
  }

  if (spiking) {
    c.lif = run_lif_sequence(c.current, neuron);
    out.output = c.lif.spikes;
  } else {
    c.membrane = integrate_sequence(c.current, neuron.leak);
    out.output = c.membrane;
  }
  return out;
}

ForwardResult network_forward(const Network& net, const SpikeTensor& batch,
                              const ForwardOptions& opts) {
  const auto& layers = net.spec.layers;
  ForwardResult res;
  res.options = opts;
  res.scores = RealMatrix(batch.size(), net.spec.n_classes);
  res.samples.resize(batch.size());
  const bool spiking_readout = net.spec.readout == Readout::spike_count;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    require(batch[b].cols() == net.spec.n_inputs(),
            "network_forward: sample channel count differs from network input");
    require(batch[b].rows() >= 1, "network_forward: empty sample");
    auto& sc = res.samples[b];
    RealMatrix x = batch[b];
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const bool last = l + 1 == layers.size();
      const auto stream = derive_seed(opts.dropout_seed, "dropout", b * layers.size() + l);
      auto lo = layer_forward(x, net.params.weights[l], net.params.delays[l], layers[l],
                              net.delay, net.neuron, opts, stream, !last || spiking_readout);
      x = std::move(lo.output);
      sc.layers.push_back(std::move(lo.cache));
    }

    const auto steps = x.rows();
    auto scores = res.scores.row(b);
    switch (net.spec.readout) {
      case Readout::mean_membrane:
      case Readout::spike_count:
        for (std::size_t t = 0; t < steps; ++t)
          for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += x(t, k);
        if (net.spec.readout == Readout::mean_membrane)
          for (auto& s : scores) s /= static_cast<double>(steps);
        break;
      case Readout::max_membrane:
        sc.peak_step.assign(scores.size(), 0);
        for (std::size_t k = 0; k < scores.size(); ++k) {
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t t = 0; t < steps; ++t) {
            if (x(t, k) > best) {
              best = x(t, k);
              sc.peak_step[k] = t;
            }
          }
          scores[k] = best;
        }
        break;
    }
  }
  return res;
}

Gradients network_backward(const Network& net, const ForwardResult& fwd,
                           const RealMatrix& loss_grad) {
  require(loss_grad.rows() == fwd.samples.size() && loss_grad.cols() == net.spec.n_classes,
          "network_backward: loss gradient shape mismatch");
  const auto& layers = net.spec.layers;
  Gradients grads = Gradients::zeros_like(net);

  for (std::size_t b = 0; b < fwd.samples.size(); ++b) {
    const auto& sc = fwd.samples[b];
    require(sc.layers.size() == layers.size(), "network_backward: cache/network mismatch");
    const auto steps = sc.layers.back().current.rows();
    const auto gs = loss_grad.row(b);

    // dL/d(last layer output) [T x K]
    RealMatrix g_out(steps, net.spec.n_classes);
    switch (net.spec.readout) {
      case Readout::mean_membrane:
      case Readout::spike_count: {
        const double norm =
            net.spec.readout == Readout::mean_membrane ? 1.0 / static_cast<double>(steps) : 1.0;
        for (std::size_t t = 0; t < steps; ++t)
          for (std::size_t k = 0; k < gs.size(); ++k) g_out(t, k) = gs[k] * norm;
        break;
      }
      case Readout::max_membrane:
        for (std::size_t k = 0; k < gs.size(); ++k) g_out(sc.peak_step[k], k) = gs[k];
        break;
    }

    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& spec = layers[l];
      const auto& c = sc.layers[l];
      const auto& w = net.params.weights[l];
      require(c.input.cols() == spec.n_in && c.current.cols() == spec.n_out,
              "network_backward: cache shape mismatch");
      const bool is_readout = l + 1 == layers.size();

      RealMatrix g_current = (is_readout && net.spec.readout != Readout::spike_count)
                                 ? integrate_backward(g_out, net.neuron.leak)
                                 : lif_backward(g_out, c.lif, net.neuron);

      auto& gw = grads.weights[l];
      for (std::size_t t = 0; t < steps; ++t) {
        const auto x = c.delayed.row(t);
        const auto gi = g_current.row(t);
        for (std::size_t j = 0; j < spec.n_in; ++j) {
          if (x[j] == 0.0) continue;
          auto row = gw.row(j);
          for (std::size_t i = 0; i < spec.n_out; ++i) row[i] += x[j] * gi[i];
        }
      }

      const bool need_input_grad = l > 0;
      const bool has_delay = spec.delay_mode != DelayMode::none;
      if (!need_input_grad && !has_delay) break;

      // dL/d(delayed input)
      RealMatrix g_delayed(steps, spec.n_in);
      for (std::size_t t = 0; t < steps; ++t) {
        const auto gi = g_current.row(t);
        auto gx = g_delayed.row(t);
        for (std::size_t j = 0; j < spec.n_in; ++j) {
          const auto wr = w.row(j);
          double acc = 0.0;
          for (std::size_t i = 0; i < spec.n_out; ++i) acc += wr[i] * gi[i];
          gx[j] = acc;
        }
      }
      if (!c.mask.empty())
        for (std::size_t i = 0; i < g_delayed.size(); ++i) g_delayed.flat()[i] *= c.mask.flat()[i];

      RealMatrix g_input;
      if (has_delay) {
        auto rg = delayed_read_backward(g_delayed, c.input, c.trace);
        const auto& d_base = net.params.delays[l].d_base;
        const bool shift_flow = spec.delay_mode == DelayMode::dynamic &&
                                net.delay.grad_through_congestion && !c.trace.discretized;
        std::vector<double> g_shift;
        const auto gb = route_delay_grad(rg.grad_d, d_base, c.trace, net.delay.d_max,
                                         shift_flow ? &g_shift : nullptr);
        for (std::size_t j = 0; j < gb.size(); ++j) grads.d_base[l][j] += gb[j];
        if (shift_flow) {
          DelayConfig cfg = net.delay;
          cfg.mode = spec.delay_mode;
          congestion_backward(g_shift, d_base, c.trace, cfg, rg.grad_signal);
        }
        g_input = std::move(rg.grad_signal);
      } else {
        g_input = std::move(g_delayed);
      }
      if (!need_input_grad) break;
      g_out = std::move(g_input);
    }
  }
  return grads;
}

std::size_t argmax_row(const RealMatrix& m, std::size_t row) {
  const auto r = m.row(row);
  return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

LossResult softmax_cross_entropy(const RealMatrix& scores, std::span<const int> labels) {
  require(labels.size() == scores.rows(), "softmax_cross_entropy: label count mismatch");
  LossResult res;
  res.grad = RealMatrix(scores.rows(), scores.cols());
  const double inv_b = 1.0 / static_cast<double>(std::max<std::size_t>(scores.rows(), 1));
  for (std::size_t b = 0; b < scores.rows(); ++b) {
    const auto s = scores.row(b);
    const auto label = static_cast<std::size_t>(labels[b]);
    require(label < s.size(), "softmax_cross_entropy: label out of range");
    const double peak = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - peak);
    const double log_z = peak + std::log(z);
    res.loss += (log_z - s[label]) * inv_b;
    auto g = res.grad.row(b);
    for (std::size_t k = 0; k < s.size(); ++k)
      g[k] = (std::exp(s[k] - log_z) - (k == label ? 1.0 : 0.0)) * inv_b;
    if (argmax_row(scores, b) == label) ++res.correct;
  }
  return res;
}

}  // namespace cadad
