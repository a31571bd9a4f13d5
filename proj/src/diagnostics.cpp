#include "cadad/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cadad/csv.hpp"

namespace cadad {

double input_congestion_u(const RealMatrix& weights, const RealMatrix& delayed) {
  require(weights.rows() == delayed.cols(), "input_congestion_u: weight/input shape mismatch");
  const auto n_out = weights.cols();
  std::vector<double> peak(n_out, 0.0);
  std::vector<double> drive(n_out);
  for (std::size_t t = 0; t < delayed.rows(); ++t) {
    std::fill(drive.begin(), drive.end(), 0.0);
    const auto x = delayed.row(t);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] == 0.0) continue;
      const auto w = weights.row(j);
      for (std::size_t i = 0; i < n_out; ++i) drive[i] += std::abs(w[i]) * x[j];
    }
    for (std::size_t i = 0; i < n_out; ++i) peak[i] = std::max(peak[i], drive[i]);
  }
  return std::accumulate(peak.begin(), peak.end(), 0.0);
}

double overflow(const RealMatrix& v_pre, double v_th) {
  double sum = 0.0;
  for (double v : v_pre.flat()) sum += std::max(0.0, v - v_th);
  return sum;
}

void LayerDynamicsReport::finalize() {
  overflow_per_spike = spike_count == 0 ? 0.0 : overflow / static_cast<double>(spike_count);
}

DynamicsReport dynamics_from_forward(const Network& net, const ForwardResult& fwd) {
  DynamicsReport rep;
  const auto hidden = net.spec.hidden_layers();
  rep.layers.resize(hidden);
  for (const auto& sc : fwd.samples) {
    for (std::size_t l = 0; l < hidden; ++l) {
      const auto& c = sc.layers[l];
      auto& r = rep.layers[l];
      r.u += input_congestion_u(net.params.weights[l], c.delayed);
      r.overflow += overflow(c.lif.v_pre, net.neuron.v_threshold);
      for (double s : c.lif.spikes.flat()) r.spike_count += s >= 0.5 ? 1 : 0;
    }
  }
  for (auto& r : rep.layers) {
    r.finalize();
    rep.total.u += r.u;
    rep.total.overflow += r.overflow;
    rep.total.spike_count += r.spike_count;
  }
  rep.total.finalize();
  return rep;
}

namespace {

void merge(DynamicsReport& into, const DynamicsReport& part) {
  require(into.layers.empty() || into.layers.size() == part.layers.size(),
          "dynamics: layer counts differ");
  if (into.layers.empty()) into.layers.resize(part.layers.size());
  for (std::size_t l = 0; l < part.layers.size(); ++l) {
    into.layers[l].u += part.layers[l].u;
    into.layers[l].overflow += part.layers[l].overflow;
    into.layers[l].spike_count += part.layers[l].spike_count;
  }
}

void close(DynamicsReport& rep) {
  rep.total = {};
  for (auto& r : rep.layers) {
    r.finalize();
    rep.total.u += r.u;
    rep.total.overflow += r.overflow;
    rep.total.spike_count += r.spike_count;
  }
  rep.total.finalize();
}

}  // namespace

DynamicsReport dynamics_report(const Network& net, const Dataset& slice,
                               const ForwardOptions& opts, std::size_t batch_size) {
  require(!slice.empty(), "dynamics_report: empty data slice");
  DynamicsReport rep;
  for (std::size_t start = 0; start < slice.size(); start += batch_size) {
    const auto end = std::min(slice.size(), start + batch_size);
    SpikeTensor batch(slice.samples.begin() + static_cast<long>(start),
                      slice.samples.begin() + static_cast<long>(end));
    merge(rep, dynamics_from_forward(net, network_forward(net, batch, opts)));
  }
  close(rep);
  return rep;
}

DynamicsReport sum_reports(std::span<const DynamicsReport> reports) {
  DynamicsReport rep;
  for (const auto& r : reports) merge(rep, r);
  close(rep);
  return rep;
}

std::string dynamics_csv(const DynamicsReport& report) {
  CsvWriter w;
  w.field("layer").field("u").field("overflow").field("spikes").field("overflow_per_spike").end_row();
  auto row = [&](std::string_view name, const LayerDynamicsReport& r) {
    w.field(name).field(r.u).field(r.overflow).field(r.spike_count).field(r.overflow_per_spike).end_row();
  };
  for (std::size_t l = 0; l < report.layers.size(); ++l)
    row("layer" + std::to_string(l), report.layers[l]);
  row("sum", report.total);
  return w.str();
}

std::string dynamics_comparison_csv(const DynamicsReport& fixed, const DynamicsReport& dynamic) {
  require(fixed.layers.size() == dynamic.layers.size(),
          "dynamics_comparison_csv: layer counts differ");
  CsvWriter w;
  w.field("layer").field("u_static").field("u_dynamic").field("overflow_static")
      .field("overflow_dynamic").field("spikes_static").field("spikes_dynamic")
      .field("overflow_per_spike_static").field("overflow_per_spike_dynamic").end_row();
  auto row = [&](std::string_view name, const LayerDynamicsReport& a, const LayerDynamicsReport& b) {
    w.field(name).field(a.u).field(b.u).field(a.overflow).field(b.overflow).field(a.spike_count)
        .field(b.spike_count).field(a.overflow_per_spike).field(b.overflow_per_spike).end_row();
  };
  for (std::size_t l = 0; l < fixed.layers.size(); ++l)
    row("layer" + std::to_string(l), fixed.layers[l], dynamic.layers[l]);
  row("sum", fixed.total, dynamic.total);
  return w.str();
}

std::string export_membrane_traces(const Network& net, const RealMatrix& sample,
                                   std::size_t layer, std::size_t top_k,
                                   const ForwardOptions& opts) {
  require(top_k >= 1, "export_membrane_traces: top_k must be >= 1");
  if (layer >= net.spec.hidden_layers())
    throw std::out_of_range("export_membrane_traces: layer " + std::to_string(layer) +
                            " is not a hidden layer");
  const auto fwd = network_forward(net, SpikeTensor{sample}, opts);
  const auto& lif = fwd.samples[0].layers[layer].lif;
  const auto n = lif.spikes.cols();

  std::vector<std::size_t> counts(n, 0);
  for (std::size_t t = 0; t < lif.spikes.rows(); ++t)
    for (std::size_t i = 0; i < n; ++i) counts[i] += lif.spikes(t, i) >= 0.5 ? 1 : 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Most active first; ties broken by neuron id for determinism.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  order.resize(std::min(top_k, n));

  CsvWriter w;
  w.field("t").field("neuron_id").field("v_pre").field("spike").field("overflow_magnitude").end_row();
  for (std::size_t t = 0; t < lif.spikes.rows(); ++t) {
    for (auto i : order) {
      const double vp = lif.v_pre(t, i);
      w.field(t).field(i).field(vp).field(lif.spikes(t, i))
          .field(std::max(0.0, vp - net.neuron.v_threshold)).end_row();
    }
  }
  return w.str();
}

std::vector<std::pair<std::size_t, std::string>> export_congestion_timeseries(
    const Network& net, const RealMatrix& sample, const ForwardOptions& opts) {
  std::vector<std::pair<std::size_t, std::string>> out;
  const auto fwd = network_forward(net, SpikeTensor{sample}, opts);
  for (std::size_t l = 0; l < net.spec.layers.size(); ++l) {
    if (net.spec.layers[l].delay_mode != DelayMode::dynamic) continue;
    const auto& tr = fwd.samples[0].layers[l].trace;
    CsvWriter w;
    w.field("t").field("a_raw").field("a_smooth").field("d_shift").end_row();
    for (std::size_t t = 0; t < tr.steps(); ++t)
      w.field(t).field(tr.a_raw[t]).field(tr.a_smooth[t]).field(tr.d_shift[t]).end_row();
    out.emplace_back(l, w.str());
  }
  return out;
}

}  // namespace cadad
