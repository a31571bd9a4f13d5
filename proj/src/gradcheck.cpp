#include "cadad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cadad/rng.hpp"

namespace cadad {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

// Uniform in [lo, hi) but at least `gap` away from every integer.
double off_integer(Rng& rng, double lo, double hi, double gap) {
  for (;;) {
    const double x = rng.uniform(lo, hi);
    const double dist = std::abs(x - std::round(x));
    if (dist > gap && std::abs(dist - 0.5) > gap) return x;
  }
}

double weighted_sum(const RealMatrix& a, const RealMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.flat()[i] * b.flat()[i];
  return s;
}

}  // namespace

GradCheckResult check_delayed_read_gradient(std::uint64_t seed, std::size_t trials,
                                            std::size_t steps, std::size_t channels, double h,
                                            double tolerance) {
  GradCheckResult res{"delay_engine.delayed_read", 0, 0.0, tolerance, false};
  Rng rng(derive_seed(seed, "gradcheck.delay"));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RealMatrix signal(steps, channels);
    for (std::size_t j = 0; j < channels; ++j) {
      const double f = rng.uniform(0.05, 0.4);
      const double phase = rng.uniform(0.0, 6.3);
      for (std::size_t t = 0; t < steps; ++t)
        signal(t, j) = 0.5 + 0.5 * std::sin(f * static_cast<double>(t) + phase);
    }
    RealMatrix d(steps, channels);
    RealMatrix up(steps, channels);
    for (auto& x : d.flat()) x = off_integer(rng, 0.0, 10.0, 1e-3);
    for (auto& x : up.flat()) x = rng.uniform(-1.0, 1.0);

    const auto grad = delayed_read_backward(up, signal, trace_for_delays(d));
    for (std::size_t i = 0; i < d.size(); ++i) {
      RealMatrix dp = d;
      RealMatrix dm = d;
      dp.flat()[i] += h;
      dm.flat()[i] -= h;
      const double numeric =
          (weighted_sum(up, delayed_read(signal, dp)) - weighted_sum(up, delayed_read(signal, dm))) /
          (2.0 * h);
      res.max_rel_error =
          std::max(res.max_rel_error, relative_error(grad.grad_d.flat()[i], numeric));
      ++res.checked;
    }
  }
  res.pass = res.max_rel_error < tolerance;
  return res;
}

GradCheckResult check_network_gradient(std::uint64_t seed, NeuronConfig neuron, DelayConfig delay,
                                       const NetworkGradCheckOptions& opts) {
  neuron.spike_fn = SpikeFunction::relaxed;
  GradCheckResult res{std::string("network.bptt[") + std::string(to_string(delay.mode)) +
                          (delay.grad_through_congestion ? ",congestion-grad" : "") + "]",
                      0, 0.0, opts.tolerance, false};
  Rng rng(derive_seed(seed, "gradcheck.network"));
  const std::size_t hidden[] = {opts.hidden};
  auto spec = NetworkSpec::feedforward(opts.channels, hidden, opts.classes, delay.mode, 0.0,
                                       Readout::mean_membrane);
  auto net = Network::initialize(spec, neuron, delay, seed, 2.0);
  if (delay.mode != DelayMode::none)
    for (auto& d : net.params.delays)
      for (auto& x : d.d_base) x = off_integer(rng, 1.0, std::min(8.0, delay.d_max - 1.0), 0.05);

  SpikeTensor batch;
  std::vector<int> labels;
  for (std::size_t b = 0; b < opts.batch; ++b) {
    RealMatrix x(opts.steps, opts.channels);
    for (auto& v : x.flat()) v = rng.uniform(0.0, 1.0);
    batch.push_back(std::move(x));
    labels.push_back(static_cast<int>(rng.uniform_int(0, static_cast<long>(opts.classes) - 1)));
  }
  ForwardOptions fo;
  fo.epoch = 0;
  auto loss_of = [&](const Network& n) {
    return softmax_cross_entropy(network_forward(n, batch, fo).scores, labels).loss;
  };
  const auto fwd = network_forward(net, batch, fo);
  const auto loss = softmax_cross_entropy(fwd.scores, labels);
  const auto grads = network_backward(net, fwd, loss.grad);

  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + opts.h;
    const double up = loss_of(net);
    param = saved - opts.h;
    const double down = loss_of(net);
    param = saved;
    const double numeric = (up - down) / (2.0 * opts.h);
    res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, numeric));
    ++res.checked;
  };
  for (std::size_t l = 0; l < net.params.weights.size(); ++l)
    for (std::size_t i = 0; i < net.params.weights[l].size(); ++i)
      probe(net.params.weights[l].flat()[i], grads.weights[l].flat()[i]);
  if (delay.mode != DelayMode::none)
    for (std::size_t l = 0; l < net.params.delays.size(); ++l)
      for (std::size_t j = 0; j < net.params.delays[l].channels(); ++j)
        probe(net.params.delays[l].d_base[j], grads.d_base[l][j]);
  res.pass = res.max_rel_error < opts.tolerance;
  return res;
}

std::vector<GradCheckResult> run_gradcheck_suites(std::uint64_t seed, const NeuronConfig& neuron,
                                                  const DelayConfig& delay) {
  std::vector<GradCheckResult> out;
  out.push_back(check_delayed_read_gradient(seed));
  for (auto mode : {DelayMode::none, DelayMode::fixed, DelayMode::dynamic}) {
    DelayConfig dc = delay;
    dc.mode = mode;
    dc.grad_through_congestion = mode == DelayMode::dynamic;
    out.push_back(check_network_gradient(seed, neuron, dc));
  }
  return out;
}

}  // namespace cadad
