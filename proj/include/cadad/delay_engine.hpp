#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cadad/tensor.hpp"

namespace cadad {

enum class Nonlinearity { tanh, sigmoid, relu, arctan };

// none:    no delay at all.
// fixed:   channel-wise base delays only ("static" in configs and reports).
// dynamic: base delays plus the congestion-driven global shift.
enum class DelayMode { none, fixed, dynamic };

Nonlinearity parse_nonlinearity(std::string_view name);
std::string_view to_string(Nonlinearity nl);
DelayMode parse_delay_mode(std::string_view name);
std::string_view to_string(DelayMode mode);

// Largest allowed change of the dynamic shift between adjacent steps.
inline constexpr double kMaxShiftSlope = 0.99;
// Smallest admissible step of the emission-time map t - d[t].
inline constexpr double kMinTimeMapMargin = 1.0 - kMaxShiftSlope;

// Hyperparameters shared by every delay engine of a network. All delays are in
// time steps.
struct DelayConfig {
  DelayMode mode = DelayMode::dynamic;
  double d_max = 25.0;
  double gamma = 1.0;
  int k_smooth = 20;
  double s_max = 0.5;
  double s_min = 0.1;
  int e_decay = 70;
  Nonlinearity nonlinearity = Nonlinearity::tanh;
  // Let gradients flow from the shift back into the spike values that feed
  // the congestion metric. Off: the shift path is a stop-gradient modulator.
  bool grad_through_congestion = false;

  void validate() const;
};

// Learnable state of one delay engine: one base delay per input channel.
struct DelayParams {
  std::vector<double> d_base;

  std::size_t channels() const noexcept { return d_base.size(); }
  // Clamp every base delay into [0, d_max].
  void project(double d_max);
};

// Everything the backward pass needs from one forward delay computation.
struct DelayTrace {
  double scale = 0.0;                // S(e)
  std::vector<double> a_raw;         // [T]
  std::vector<double> a_smooth;      // [T]
  std::vector<double> d_shift_raw;   // [T], before slope limiting
  std::vector<double> d_shift;       // [T]
  RealMatrix d_eff;                  // [T x C]
  RealMatrix frac;                   // [T x C], in [0, 1)
  IndexMatrix floor_idx;             // [T x C], may be negative (zero history)
  IndexMatrix ceil_idx;              // [T x C], floor or floor + 1
  bool discretized = false;

  std::size_t steps() const noexcept { return d_eff.rows(); }
  std::size_t channels() const noexcept { return d_eff.cols(); }
};

// A_raw[t] = mean_j S_j[t - round(d_base[j])], reads before t = 0 are zero.
std::vector<double> congestion_raw(const RealMatrix& spikes, std::span<const double> d_base);

// Causal moving average over the last k_s steps with zero left-padding.
std::vector<double> smooth(std::span<const double> a_raw, int k_smooth);

// Exponential annealing of the shift scale from s_max to s_min over e_decay
// epochs; e_decay == 0 pins the scale to s_min.
double anneal_scale(int epoch, double s_max, double s_min, int e_decay);

double apply_nonlinearity(Nonlinearity nl, double x);
double nonlinearity_derivative(Nonlinearity nl, double x);

std::vector<double> raw_shift(std::span<const double> a_smooth, double scale, double gamma,
                              double d_max, Nonlinearity nl);

// Causal slope limiter: adjacent outputs differ by at most kMaxShiftSlope.
std::vector<double> slope_limit(std::span<const double> d_shift_raw);

// d[t][j] = clamp(d_base[j] + d_shift[t], 0, d_max)
RealMatrix effective_delay(std::span<const double> d_base, std::span<const double> d_shift,
                           double d_max);

// Round-half-up to integer steps for inference-time lookups.
IndexMatrix discretize_for_inference(const RealMatrix& d);

struct TimeMapReport {
  bool ok = true;
  double min_margin = 1.0;
  std::size_t violations = 0;
};

// Checks that t - d[t] is strictly increasing with margin >= kMinTimeMapMargin.
// Never throws; violations are reported.
TimeMapReport check_time_map(std::span<const double> d_shift);

// Full delay computation for one sample. `spikes` is the engine input [T x C].
// `discretize` replaces interpolation by rounded integer lookups.
DelayTrace build_trace(const RealMatrix& spikes, std::span<const double> d_base,
                       const DelayConfig& cfg, int epoch, bool discretize);

// Trace holding only the read indices for an explicit delay matrix (no
// congestion path). Throws ContractError on negative delays.
DelayTrace trace_for_delays(const RealMatrix& d, bool discretize = false);

// Interpolated delayed read driven by an effective delay matrix.
RealMatrix delayed_read(const RealMatrix& signal, const RealMatrix& d);
// Same, reusing the indices stored in a trace.
RealMatrix delayed_read(const RealMatrix& signal, const DelayTrace& trace);

struct DelayedReadGrad {
  RealMatrix grad_signal;  // [T x C]
  RealMatrix grad_d;       // [T x C], dL/d d_eff before clamp routing
};

// grad_d[t][j] = upstream[t][j] * (S_j[floor] - S_j[ceil]);
// grad_signal scatters upstream * (1 - frac) to floor and upstream * frac to ceil.
DelayedReadGrad delayed_read_backward(const RealMatrix& upstream, const RealMatrix& signal,
                                      const DelayTrace& trace);

// Routes grad_d through the clamp of effective_delay. Returns dL/d d_base [C]
// and, into `grad_shift` when non-null, dL/d d_shift [T].
std::vector<double> route_delay_grad(const RealMatrix& grad_d, std::span<const double> d_base,
                                     const DelayTrace& trace, double d_max,
                                     std::vector<double>* grad_shift);

// Backward through slope_limit -> raw_shift -> smooth -> congestion_raw.
// Accumulates dL/dS into `grad_signal` (shape of the engine input).
void congestion_backward(std::span<const double> grad_shift, std::span<const double> d_base,
                         const DelayTrace& trace, const DelayConfig& cfg,
                         RealMatrix& grad_signal);

// CSV with columns t,a_raw,a_smooth,d_shift,d_eff_min,d_eff_max.
std::string delay_trace_csv(const DelayTrace& trace);

}  // namespace cadad
