#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cadad/network.hpp"

namespace cadad {

struct GradCheckResult {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// |a - b| / max(|a|, |b|, floor): relative where gradients are sizeable,
// absolute below `floor`.
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Analytic dL/dd from delayed_read_backward against central differences of
// delayed_read under L = sum(upstream * read). Delays are drawn away from
// integer points, where the interpolant has kinks.
GradCheckResult check_delayed_read_gradient(std::uint64_t seed, std::size_t trials = 50,
                                            std::size_t steps = 64, std::size_t channels = 8,
                                            double h = 1e-5, double tolerance = 1e-4);

struct NetworkGradCheckOptions {
  std::size_t channels = 8;
  std::size_t hidden = 16;
  std::size_t steps = 32;
  std::size_t classes = 3;
  std::size_t batch = 2;
  double h = 1e-5;
  double tolerance = 1e-3;
};

// Whole-network BPTT check on a relaxed (smooth) 2-layer network: every weight
// and every base delay against central differences of the cross-entropy loss.
// `neuron` and `delay` supply hyperparameters; the spike function is forced to
// the relaxed form.
GradCheckResult check_network_gradient(std::uint64_t seed, NeuronConfig neuron, DelayConfig delay,
                                       const NetworkGradCheckOptions& opts = {});

// The delay-engine suite plus network suites in none, static, and dynamic
// mode (the latter with gradient flow through the congestion path).
std::vector<GradCheckResult> run_gradcheck_suites(std::uint64_t seed, const NeuronConfig& neuron,
                                                  const DelayConfig& delay);

}  // namespace cadad
