#include <algorithm>
#include <stdexcept>

#include "cadad/diagnostics.hpp"
#include "cadad/errors.hpp"
#include "cadad/rng.hpp"
#include "doctest.h"

using namespace cadad;

namespace {

Dataset random_slice(std::uint64_t seed, std::size_t n, std::size_t steps, std::size_t channels) {
  Rng rng(seed);
  Dataset d;
  d.n_classes = 3;
  for (std::size_t i = 0; i < n; ++i) {
    RealMatrix x(steps, channels);
    for (auto& v : x.flat()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    d.samples.push_back(std::move(x));
    d.labels.push_back(static_cast<int>(i % 3));
    d.ids.push_back(i);
  }
  return d;
}

Network net_for(DelayMode mode, std::uint64_t seed, DelayConfig dc = {}) {
  const std::vector<std::size_t> hidden{12, 10};
  dc.mode = mode;
  return Network::initialize(
      NetworkSpec::feedforward(6, hidden, 3, mode, 0.0, Readout::mean_membrane), {}, dc, seed, 2.5);
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("input_congestion_u") {
  SUBCASE("hand example") {
    RealMatrix w(2, 1);
    w(0, 0) = 1.0;
    w(1, 0) = -2.0;
    RealMatrix x(2, 2);
    x(0, 0) = 1.0;
    x(1, 0) = 1.0;
    x(1, 1) = 1.0;
    CHECK(input_congestion_u(w, x) == 3.0);
    w.flat()[0] *= 2.5;
    w.flat()[1] *= 2.5;
    CHECK(input_congestion_u(w, x) == doctest::Approx(7.5).epsilon(1e-15));
  }
  SUBCASE("zero input") {
    RealMatrix w(3, 2);
    w.fill(1.0);
    CHECK(input_congestion_u(w, RealMatrix(5, 3)) == 0.0);
  }
  SUBCASE("sums the per-neuron peaks") {
    RealMatrix w(1, 2);
    w(0, 0) = 1.0;
    w(0, 1) = -4.0;
    RealMatrix x(3, 1);
    x(1, 0) = 0.5;
    CHECK(input_congestion_u(w, x) == 2.5);
  }
}

TEST_CASE("overflow") {
  RealMatrix v(3, 1);
  v(0, 0) = 0.5;
  v(1, 0) = 1.3;
  v(2, 0) = 2.0;
  CHECK(overflow(v, 1.0) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(overflow(v, 5.0) == 0.0);
  Rng rng(1);
  RealMatrix r(20, 4);
  for (auto& x : r.flat()) x = rng.uniform(-1.0, 3.0);
  double prev = overflow(r, -2.0);
  for (double th = -2.0; th <= 4.0; th += 0.25) {
    CHECK(overflow(r, th) <= prev);
    prev = overflow(r, th);
  }
}

TEST_CASE("dynamics_report aggregates hidden layers") {
  const auto net = net_for(DelayMode::fixed, 3);
  const auto slice = random_slice(4, 6, 20, 6);
  const auto rep = dynamics_report(net, slice, {});
  CHECK(rep.layers.size() == 2);
  double u = 0.0, ov = 0.0;
  std::size_t spikes = 0;
  for (const auto& l : rep.layers) {
    u += l.u;
    ov += l.overflow;
    spikes += l.spike_count;
  }
  CHECK(rep.total.u == doctest::Approx(u).epsilon(1e-14));
  CHECK(rep.total.spike_count == spikes);
  CHECK(rep.total.overflow_per_spike == doctest::Approx(ov / static_cast<double>(spikes)).epsilon(1e-14));
  CHECK(spikes > 0);
  // batch size does not change the totals
  const auto rep1 = dynamics_report(net, slice, {}, 1);
  CHECK(rep1.total.u == doctest::Approx(rep.total.u).epsilon(1e-12));
  CHECK(rep1.total.spike_count == rep.total.spike_count);
}

TEST_CASE("overflow per spike is invariant under duplicating the slice") {
  const auto net = net_for(DelayMode::dynamic, 5);
  auto slice = random_slice(6, 5, 20, 6);
  const auto a = dynamics_report(net, slice, {});
  auto doubled = slice;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    doubled.samples.push_back(slice.samples[i]);
    doubled.labels.push_back(slice.labels[i]);
    doubled.ids.push_back(slice.ids[i]);
  }
  const auto b = dynamics_report(net, doubled, {});
  CHECK(b.total.overflow_per_spike == doctest::Approx(a.total.overflow_per_spike).epsilon(1e-12));
  CHECK(b.total.spike_count == 2 * a.total.spike_count);
}

TEST_CASE("static and zero-shift dynamic networks report identical dynamics") {
  DelayConfig zero;
  zero.s_max = 0.0;
  zero.s_min = 0.0;
  zero.e_decay = 0;
  const auto dyn = net_for(DelayMode::dynamic, 8, zero);
  auto fixed = dyn;
  for (auto& l : fixed.spec.layers) l.delay_mode = DelayMode::fixed;
  const auto slice = random_slice(9, 4, 24, 6);
  CHECK(dynamics_csv(dynamics_report(dyn, slice, {})) == dynamics_csv(dynamics_report(fixed, slice, {})));
}

TEST_CASE("dynamics_report rejects an empty slice") {
  Dataset empty;
  CHECK_THROWS_AS(dynamics_report(net_for(DelayMode::none, 1), empty, {}), ContractError);
}

TEST_CASE("dynamics CSVs") {
  const auto net = net_for(DelayMode::dynamic, 2);
  const auto rep = dynamics_report(net, random_slice(3, 3, 16, 6), {});
  const auto csv = dynamics_csv(rep);
  CHECK(csv.rfind("layer,u,overflow,spikes,overflow_per_spike\nlayer0,", 0) == 0);
  CHECK(csv.find("\nsum,") != std::string::npos);
  CHECK(lines(csv) == 4);
  const auto cmp = dynamics_comparison_csv(rep, rep);
  CHECK(cmp.rfind("layer,u_static,u_dynamic,", 0) == 0);
  CHECK(lines(cmp) == 4);
  const std::vector<DynamicsReport> two{rep, rep};
  const auto sum = sum_reports(two);
  CHECK(sum.total.spike_count == 2 * rep.total.spike_count);
  CHECK(sum.total.overflow_per_spike == doctest::Approx(rep.total.overflow_per_spike).epsilon(1e-12));
}

TEST_CASE("membrane trace export") {
  const auto net = net_for(DelayMode::fixed, 4);
  const auto x = random_slice(5, 1, 18, 6).samples[0];
  const auto csv = export_membrane_traces(net, x, 0, 3, {});
  CHECK(csv.rfind("t,neuron_id,v_pre,spike,overflow_magnitude\n", 0) == 0);
  CHECK(lines(csv) == 1 + 18 * 3);
  CHECK_THROWS_AS(export_membrane_traces(net, x, 2, 3, {}), std::out_of_range);
  // asking for more neurons than exist exports all of them
  CHECK(lines(export_membrane_traces(net, x, 1, 50, {})) == 1 + 18 * 10);

  // the first exported neuron is the most active one
  const auto fwd = network_forward(net, SpikeTensor{x}, {});
  const auto& spikes = fwd.samples[0].layers[0].lif.spikes;
  std::size_t best = 0, best_count = 0;
  for (std::size_t i = 0; i < spikes.cols(); ++i) {
    std::size_t n = 0;
    for (std::size_t t = 0; t < spikes.rows(); ++t) n += spikes(t, i) > 0.5;
    if (n > best_count) {
      best_count = n;
      best = i;
    }
  }
  const auto first_row = csv.substr(csv.find('\n') + 1);
  CHECK(first_row.rfind("0," + std::to_string(best) + ",", 0) == 0);
}

TEST_CASE("congestion time series export") {
  const auto x = random_slice(6, 1, 15, 6).samples[0];
  const auto dyn = export_congestion_timeseries(net_for(DelayMode::dynamic, 1), x, {});
  CHECK(dyn.size() == 3);  // two hidden layers plus the readout
  CHECK(dyn[0].second.rfind("t,a_raw,a_smooth,d_shift\n", 0) == 0);
  CHECK(lines(dyn[0].second) == 16);
  CHECK(export_congestion_timeseries(net_for(DelayMode::fixed, 1), x, {}).empty());
}
