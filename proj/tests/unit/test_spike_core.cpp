#include <cmath>

#include "cadad/errors.hpp"
#include "cadad/rng.hpp"
#include "cadad/spike_core.hpp"
#include "doctest.h"

using namespace cadad;

namespace {

NeuronConfig neuron(double leak, double vth = 1.0, double vreset = 0.0) {
  NeuronConfig n;
  n.leak = leak;
  n.v_threshold = vth;
  n.v_reset = vreset;
  return n;
}

RealMatrix column(std::initializer_list<double> values) {
  RealMatrix m(values.size(), 1);
  std::size_t t = 0;
  for (double v : values) m(t++, 0) = v;
  return m;
}

}  // namespace

TEST_CASE("lif_step: pure decay without input") {
  const std::vector<double> v{0.4}, i{0.0};
  const auto r = lif_step(v, i, neuron(0.5));
  CHECK(r.v_pre[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r.spikes[0] == 0.0);
  CHECK(r.v_next[0] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("lif_step: threshold crossing fires and resets") {
  const std::vector<double> v{1.0}, i{0.2};
  const auto r = lif_step(v, i, neuron(0.9));
  CHECK(r.v_pre[0] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(r.spikes[0] == 1.0);
  CHECK(r.v_next[0] == 0.0);
}

TEST_CASE("lif_step: zero is a fixed point") {
  const std::vector<double> v{0.0}, i{0.0};
  const auto r = lif_step(v, i, neuron(0.5));
  CHECK(r.v_pre[0] == 0.0);
  CHECK(r.spikes[0] == 0.0);
  CHECK(r.v_next[0] == 0.0);
}

TEST_CASE("lif_step: reaching the threshold exactly fires") {
  const std::vector<double> v{0.0}, i{1.0};
  CHECK(lif_step(v, i, neuron(0.5)).spikes[0] == 1.0);
}

TEST_CASE("lif_step: reset goes to V_reset") {
  const std::vector<double> v{0.0}, i{2.0};
  CHECK(lif_step(v, i, neuron(0.5, 1.0, -0.25)).v_next[0] == -0.25);
}

TEST_CASE("lif_step: errors") {
  const std::vector<double> v{0.0, 0.0}, i{1.0};
  CHECK_THROWS_AS(lif_step(v, i, neuron(0.5)), ContractError);
  const std::vector<double> v1{0.0}, bad{std::nan("")};
  CHECK_THROWS_AS(lif_step(v1, bad, neuron(0.5)), NumericError);
  const std::vector<double> inf{INFINITY};
  CHECK_THROWS_AS(lif_step(v1, inf, neuron(0.5)), NumericError);
}

TEST_CASE("NeuronConfig validation and tau conversion") {
  CHECK_THROWS_AS(neuron(0.0).validate(), ConfigError);
  CHECK_THROWS_AS(neuron(1.0).validate(), ConfigError);
  CHECK_THROWS_AS(neuron(0.5, 1.0, 1.0).validate(), ConfigError);
  CHECK_NOTHROW(neuron(0.5).validate());
  CHECK(NeuronConfig::leak_from_tau(10.0, 10.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("surrogate_derivative: peak, tails, symmetry, unit mass") {
  CHECK(surrogate_derivative(0.0, 5.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(surrogate_derivative(1e9, 5.0) < 1e-15);
  CHECK(surrogate_derivative(-1e9, 5.0) < 1e-15);
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const double u = rng.uniform(-10.0, 10.0);
    CHECK(surrogate_derivative(u, 5.0) == surrogate_derivative(-u, 5.0));
  }
  // Trapezoidal integral over a wide window.
  const double lo = -2000.0, hi = 2000.0;
  const int n = 4000000;
  const double h = (hi - lo) / n;
  double sum = 0.5 * (surrogate_derivative(lo, 5.0) + surrogate_derivative(hi, 5.0));
  for (int k = 1; k < n; ++k) sum += surrogate_derivative(lo + k * h, 5.0);
  CHECK(std::abs(sum * h - 1.0) < 0.05);
}

TEST_CASE("relaxed_spike is the antiderivative of the surrogate") {
  CHECK(relaxed_spike(0.0, 5.0) == 0.5);
  for (double u : {-3.0, -0.4, 0.1, 0.7, 2.0}) {
    const double h = 1e-6;
    const double fd = (relaxed_spike(u + h, 5.0) - relaxed_spike(u - h, 5.0)) / (2 * h);
    CHECK(fd == doctest::Approx(surrogate_derivative(u, 5.0)).epsilon(1e-6));
  }
}

TEST_CASE("run_lif_sequence: quiet input stays quiet") {
  RealMatrix currents(10, 3);
  const auto tr = run_lif_sequence(currents, neuron(0.5));
  for (double s : tr.spikes.flat()) CHECK(s == 0.0);
  for (double v : tr.v_pre.flat()) CHECK(v == 0.0);
}

TEST_CASE("run_lif_sequence: constant subthreshold drive converges to I/(1-leak)") {
  RealMatrix currents(200, 1);
  currents.fill(0.3);
  const auto tr = run_lif_sequence(currents, neuron(0.5));
  for (double s : tr.spikes.flat()) CHECK(s == 0.0);
  CHECK(tr.v_pre(199, 0) == doctest::Approx(0.6).epsilon(1e-12));
  for (double v : tr.v_pre.flat()) CHECK(v < 0.6);
}

TEST_CASE("run_lif_sequence: single pulse fires once") {
  const auto tr = run_lif_sequence(column({1.5, 0, 0, 0, 0}), neuron(0.5));
  CHECK(tr.spikes(0, 0) == 1.0);
  for (std::size_t t = 1; t < 5; ++t) {
    CHECK(tr.spikes(t, 0) == 0.0);
    CHECK(tr.v_pre(t, 0) == 0.0);
  }
}

TEST_CASE("lif_backward: single step closed form") {
  const auto cfg = neuron(0.5);
  const auto tr = run_lif_sequence(column({0.8}), cfg);
  const auto g = lif_backward(column({2.0}), tr, cfg);
  CHECK(g(0, 0) == doctest::Approx(2.0 * surrogate_derivative(0.8 - 1.0, 5.0)).epsilon(1e-15));
}

TEST_CASE("lif_backward matches finite differences of the relaxed forward pass") {
  auto cfg = neuron(0.6);
  cfg.spike_fn = SpikeFunction::relaxed;
  Rng rng(11);
  RealMatrix currents(12, 3), up(12, 3);
  for (auto& x : currents.flat()) x = rng.uniform(0.0, 1.0);
  for (auto& x : up.flat()) x = rng.uniform(-1.0, 1.0);
  auto loss = [&](const RealMatrix& c) {
    const auto tr = run_lif_sequence(c, cfg);
    double l = 0.0;
    for (std::size_t k = 0; k < c.flat().size(); ++k) l += up.flat()[k] * tr.spikes.flat()[k];
    return l;
  };
  const auto g = lif_backward(up, run_lif_sequence(currents, cfg), cfg);
  for (std::size_t k = 0; k < currents.flat().size(); ++k) {
    auto p = currents, m = currents;
    p.flat()[k] += 1e-6;
    m.flat()[k] -= 1e-6;
    const double fd = (loss(p) - loss(m)) / 2e-6;
    CHECK(g.flat()[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("integrate_sequence and its backward") {
  const auto v = integrate_sequence(column({1.0, 0.0, 2.0}), 0.5);
  CHECK(v(0, 0) == 1.0);
  CHECK(v(1, 0) == 0.5);
  CHECK(v(2, 0) == 2.25);
  const auto g = integrate_backward(column({0.0, 0.0, 1.0}), 0.5);
  CHECK(g(0, 0) == 0.25);
  CHECK(g(1, 0) == 0.5);
  CHECK(g(2, 0) == 1.0);
}
