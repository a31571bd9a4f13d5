#include "cadad/spike_core.hpp"

#include <cmath>
#include <string>

namespace cadad {

double NeuronConfig::leak_from_tau(double tau_ms, double dt_ms) {
  if (!(tau_ms > 0.0) || !(dt_ms > 0.0)) throw ConfigError("tau and dt must be positive");
  return std::exp(-dt_ms / tau_ms);
}

void NeuronConfig::validate() const {
  if (!(leak > 0.0 && leak < 1.0))
    throw ConfigError("neuron leak must lie in (0, 1), got " + std::to_string(leak));
  if (!(v_reset < v_threshold)) throw ConfigError("neuron v_reset must be below v_threshold");
  if (!(surrogate_slope > 0.0)) throw ConfigError("neuron surrogate_slope must be positive");
}

double surrogate_derivative(double u, double slope) {
  const double d = 1.0 + slope * std::abs(u);
  return slope / (2.0 * d * d);
}

double relaxed_spike(double u, double slope) {
  return 0.5 + 0.5 * slope * u / (1.0 + slope * std::abs(u));
}

namespace {

inline double fire(double v_pre, const NeuronConfig& cfg) {
  const double u = v_pre - cfg.v_threshold;
  if (cfg.spike_fn == SpikeFunction::relaxed) return relaxed_spike(u, cfg.surrogate_slope);
  return u >= 0.0 ? 1.0 : 0.0;
}

}  // namespace

LifStepResult lif_step(std::span<const double> v_prev, std::span<const double> current,
                       const NeuronConfig& cfg) {
  require(v_prev.size() == current.size(), "lif_step: current length differs from state");
  LifStepResult out;
  const auto n = v_prev.size();
  out.v_next.resize(n);
  out.spikes.resize(n);
  out.v_pre.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(v_prev[i]) || !std::isfinite(current[i]))
      throw NumericError("lif_step: non-finite input at neuron " + std::to_string(i));
    const double v_pre = cfg.leak * v_prev[i] + current[i];
    const double s = fire(v_pre, cfg);
    out.v_pre[i] = v_pre;
    out.spikes[i] = s;
    out.v_next[i] = v_pre * (1.0 - s) + cfg.v_reset * s;
  }
  return out;
}

LifTrace run_lif_sequence(const RealMatrix& currents, const NeuronConfig& cfg) {
  const auto steps = currents.rows();
  const auto n = currents.cols();
  LifTrace trace{RealMatrix(steps, n), RealMatrix(steps, n)};
  std::vector<double> v(n, cfg.v_reset);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto in = currents.row(t);
    auto v_pre = trace.v_pre.row(t);
    auto s = trace.spikes.row(t);
    for (std::size_t i = 0; i < n; ++i) {
      const double vp = cfg.leak * v[i] + in[i];
      if (!std::isfinite(vp))
        throw NumericError("run_lif_sequence: non-finite potential at t=" + std::to_string(t));
      const double si = fire(vp, cfg);
      v_pre[i] = vp;
      s[i] = si;
      v[i] = vp * (1.0 - si) + cfg.v_reset * si;
    }
  }
  return trace;
}

RealMatrix lif_backward(const RealMatrix& grad_spikes, const LifTrace& trace,
                        const NeuronConfig& cfg) {
  require(grad_spikes.same_shape(trace.spikes), "lif_backward: gradient/trace shape mismatch");
  const auto steps = grad_spikes.rows();
  const auto n = grad_spikes.cols();
  RealMatrix grad_current(steps, n);
  // dL/dv[t], carried backwards through the leak.
  std::vector<double> grad_v(n, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const auto gs = grad_spikes.row(t);
    const auto vp = trace.v_pre.row(t);
    const auto s = trace.spikes.row(t);
    auto gi = grad_current.row(t);
    for (std::size_t i = 0; i < n; ++i) {
      double g_spike = gs[i];
      if (!cfg.detach_reset) g_spike += grad_v[i] * (cfg.v_reset - vp[i]);
      const double g_pre = grad_v[i] * (1.0 - s[i]) +
                           g_spike * surrogate_derivative(vp[i] - cfg.v_threshold,
                                                          cfg.surrogate_slope);
      gi[i] = g_pre;
      grad_v[i] = cfg.leak * g_pre;
    }
  }
  return grad_current;
}

RealMatrix integrate_sequence(const RealMatrix& currents, double leak) {
  RealMatrix v(currents.rows(), currents.cols());
  for (std::size_t t = 0; t < currents.rows(); ++t) {
    for (std::size_t i = 0; i < currents.cols(); ++i) {
      const double prev = t == 0 ? 0.0 : v(t - 1, i);
      v(t, i) = leak * prev + currents(t, i);
    }
  }
  return v;
}

RealMatrix integrate_backward(const RealMatrix& grad_membrane, double leak) {
  RealMatrix g(grad_membrane.rows(), grad_membrane.cols());
  for (std::size_t t = grad_membrane.rows(); t-- > 0;) {
    for (std::size_t i = 0; i < grad_membrane.cols(); ++i) {
      const double carry = t + 1 < grad_membrane.rows() ? leak * g(t + 1, i) : 0.0;
      g(t, i) = grad_membrane(t, i) + carry;
    }
  }
  return g;
}

}  // namespace cadad
