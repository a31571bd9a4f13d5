#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cadad/delay_engine.hpp"
#include "cadad/spike_core.hpp"
#include "cadad/tensor.hpp"

namespace cadad {

// How the last layer turns its activity into class scores.
//  mean_membrane / max_membrane: non-spiking leaky integrator, score is the
//  mean (max) of its membrane over time. spike_count: spiking LIF readout,
//  score is the number of spikes.
enum class Readout { mean_membrane, max_membrane, spike_count };

Readout parse_readout(std::string_view name);
std::string_view to_string(Readout r);

struct LayerSpec {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  DelayMode delay_mode = DelayMode::dynamic;
  double dropout_rate = 0.0;  // applied to delayed inputs while training
};

// Feedforward stack. The last layer is the readout and has n_out == n_classes;
// all earlier layers are spiking hidden layers.
struct NetworkSpec {
  std::vector<LayerSpec> layers;
  Readout readout = Readout::mean_membrane;
  std::size_t n_classes = 0;

  std::size_t n_inputs() const { return layers.front().n_in; }
  std::size_t hidden_layers() const { return layers.size() - 1; }
  void validate() const;

  static NetworkSpec feedforward(std::size_t n_in, std::span<const std::size_t> hidden,
                                 std::size_t n_classes, DelayMode mode, double dropout,
                                 Readout readout);
};

struct NetworkParams {
  // weights[l] is [n_in x n_out]: entry (j, i) is the synapse from input
  // channel j to neuron i.
  std::vector<RealMatrix> weights;
  // One base delay per input channel of each layer.
  std::vector<DelayParams> delays;
};

struct Network {
  NetworkSpec spec;
  NeuronConfig neuron;
  DelayConfig delay;
  NetworkParams params;

  // Weights uniform with standard deviation init_gain / sqrt(n_in); base
  // delays uniform in [0, d_max / 2] (zero for layers without delays).
  static Network initialize(NetworkSpec spec, NeuronConfig neuron, DelayConfig delay,
                            std::uint64_t seed, double init_gain);

  std::size_t weight_count() const;
  std::size_t delay_parameter_count() const;
};

struct ForwardOptions {
  int epoch = 0;
  bool training = false;
  bool discretize_delays = false;
  std::uint64_t dropout_seed = 0;
};

struct LayerCache {
  RealMatrix input;    // [T x n_in]
  DelayTrace trace;
  RealMatrix delayed;  // [T x n_in], after dropout
  RealMatrix mask;     // dropout scale per entry; empty when inactive
  RealMatrix current;  // [T x n_out]
  LifTrace lif;        // spiking layers
  RealMatrix membrane; // integrator readout
};

struct SampleCache {
  std::vector<LayerCache> layers;
  std::vector<std::size_t> peak_step;  // max_membrane readout: argmax per class
};

struct ForwardResult {
  RealMatrix scores;  // [B x n_classes]
  std::vector<SampleCache> samples;
  ForwardOptions options;
};

struct Gradients {
  std::vector<RealMatrix> weights;
  std::vector<std::vector<double>> d_base;

  static Gradients zeros_like(const Network& net);
  double squared_norm() const;
  void scale(double factor);
};

struct LayerOutput {
  RealMatrix output;  // spikes, or integrator membrane for the readout
  LayerCache cache;
};

// One delayed, weighted, LIF layer on a single sample.
LayerOutput layer_forward(const RealMatrix& spikes_in, const RealMatrix& weights,
                          const DelayParams& delay, const LayerSpec& spec,
                          const DelayConfig& delay_cfg, const NeuronConfig& neuron,
                          const ForwardOptions& opts, std::uint64_t dropout_stream,
                          bool spiking);

ForwardResult network_forward(const Network& net, const SpikeTensor& batch,
                              const ForwardOptions& opts);

// Exact reverse-mode BPTT for dL/dscores = loss_grad [B x n_classes].
Gradients network_backward(const Network& net, const ForwardResult& fwd,
                           const RealMatrix& loss_grad);

struct LossResult {
  double loss = 0.0;        // mean softmax cross-entropy over the batch
  RealMatrix grad;          // dL/dscores
  std::size_t correct = 0;  // argmax hits
};

LossResult softmax_cross_entropy(const RealMatrix& scores, std::span<const int> labels);

std::size_t argmax_row(const RealMatrix& m, std::size_t row);

}  // namespace cadad
