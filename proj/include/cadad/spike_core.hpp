#pragma once

#include <span>
#include <vector>

#include "cadad/tensor.hpp"

namespace cadad {

// How the forward pass turns the pre-reset potential into a spike.
//  - heaviside: S = 1[v_pre >= V_th] (the model itself).
//  - relaxed:   S = smooth step whose derivative is exactly the surrogate.
//               Only used to make the forward pass differentiable for
//               finite-difference gradient checks.
enum class SpikeFunction { heaviside, relaxed };

struct NeuronConfig {
  double leak = 0.5;  // lambda in (0, 1)
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double surrogate_slope = 5.0;
  SpikeFunction spike_fn = SpikeFunction::heaviside;
  // Treat the reset gate as a constant during BPTT.
  bool detach_reset = false;

  // lambda = exp(-dt / tau)
  static double leak_from_tau(double tau_ms, double dt_ms);

  // Throws ConfigError.
  void validate() const;
};

struct LifStepResult {
  std::vector<double> v_next;
  std::vector<double> spikes;
  std::vector<double> v_pre;
};

// One discrete LIF update: leaky integration, threshold, hard reset.
LifStepResult lif_step(std::span<const double> v_prev, std::span<const double> current,
                       const NeuronConfig& cfg);

// Fast-sigmoid surrogate for dH/du at u = v_pre - V_th:
//   slope / (2 (1 + slope |u|)^2)
double surrogate_derivative(double u, double slope);

// Antiderivative of surrogate_derivative with value 1/2 at u = 0.
double relaxed_spike(double u, double slope);

struct LifTrace {
  RealMatrix spikes;  // [T x N]
  RealMatrix v_pre;   // [T x N], before reset
};

// Iterates lif_step over the rows of `currents` starting from v = V_reset.
LifTrace run_lif_sequence(const RealMatrix& currents, const NeuronConfig& cfg);

// Reverse-mode pass through run_lif_sequence. Given dL/dS [T x N], returns
// dL/dI [T x N]. The spike nonlinearity uses surrogate_derivative; the reset
// gate is differentiated unless cfg.detach_reset.
RealMatrix lif_backward(const RealMatrix& grad_spikes, const LifTrace& trace,
                        const NeuronConfig& cfg);

// Non-spiking leaky integrator, v[t] = leak * v[t-1] + I[t], v[-1] = 0.
RealMatrix integrate_sequence(const RealMatrix& currents, double leak);
RealMatrix integrate_backward(const RealMatrix& grad_membrane, double leak);

}  // namespace cadad
