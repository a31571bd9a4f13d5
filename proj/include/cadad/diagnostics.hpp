#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cadad/data.hpp"
#include "cadad/network.hpp"

namespace cadad {

// Peak delayed input drive: sum over output neurons i of
// max_t sum_j |w_ji| * x_j(t). `weights` is [n_in x n_out], `delayed` [T x n_in].
double input_congestion_u(const RealMatrix& weights, const RealMatrix& delayed);

// Potential discarded by the hard reset: sum_t sum_n max(0, v_pre - v_th).
double overflow(const RealMatrix& v_pre, double v_th);

struct LayerDynamicsReport {
  double u = 0.0;
  double overflow = 0.0;
  std::size_t spike_count = 0;
  double overflow_per_spike = 0.0;  // 0 without spikes

  void finalize();
};

// Hidden (spiking) layers plus their sum. The sum row's overflow_per_spike is
// the ratio of summed overflow to summed spikes.
struct DynamicsReport {
  std::vector<LayerDynamicsReport> layers;
  LayerDynamicsReport total;
};

// Aggregates over a forward pass that has already run.
DynamicsReport dynamics_from_forward(const Network& net, const ForwardResult& fwd);

// Runs the network over `slice` and aggregates. Throws ContractError when the
// slice is empty.
DynamicsReport dynamics_report(const Network& net, const Dataset& slice,
                               const ForwardOptions& opts, std::size_t batch_size = 64);

// Element-wise sum of reports over the same layers (e.g. across seeds).
DynamicsReport sum_reports(std::span<const DynamicsReport> reports);

// layer,u,overflow,spikes,overflow_per_spike with a closing "sum" row.
std::string dynamics_csv(const DynamicsReport& report);

// Static and dynamic models side by side, one row per layer plus "sum".
std::string dynamics_comparison_csv(const DynamicsReport& fixed, const DynamicsReport& dynamic);

// Top-k neurons of a hidden layer by spike count for one sample:
// t,neuron_id,v_pre,spike,overflow_magnitude. Throws std::out_of_range on a
// bad layer index.
std::string export_membrane_traces(const Network& net, const RealMatrix& sample,
                                   std::size_t layer, std::size_t top_k,
                                   const ForwardOptions& opts);

// One t,a_raw,a_smooth,d_shift CSV per dynamic layer, keyed by layer index.
// Empty when the network has no dynamic layers.
std::vector<std::pair<std::size_t, std::string>> export_congestion_timeseries(
    const Network& net, const RealMatrix& sample, const ForwardOptions& opts);

}  // namespace cadad
