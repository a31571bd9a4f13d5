// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Oracles (finite differences, reference shifts) live here
// and do not call the library's own gradient checker.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cadad/checkpoint.hpp"
#include "cadad/config.hpp"
#include "cadad/delay_engine.hpp"
#include "cadad/experiment.hpp"
#include "cadad/rng.hpp"
#include "cadad/trainer.hpp"

using namespace cadad;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("%s  criterion %2d  %-44s %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

// Uniform in [lo, hi] with the fractional part kept at least `margin` away
// from 0 (and from 0.5 when `avoid_half`).
double off_grid(Rng& rng, double lo, double hi, double margin, bool avoid_half) {
  for (;;) {
    const double x = rng.uniform(lo, hi);
    const double f = x - std::floor(x);
    if (f < margin || f > 1.0 - margin) continue;
    if (avoid_half && std::abs(f - 0.5) < margin) continue;
    return x;
  }
}

RealMatrix binary_signal(Rng& rng, std::size_t t, std::size_t c, double p) {
  RealMatrix s(t, c);
  for (auto& x : s.flat()) x = rng.bernoulli(p) ? 1.0 : 0.0;
  return s;
}

// ---------------------------------------------------------------- 1
Outcome delay_gradient_fd() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  const std::size_t steps = 64, channels = 8;
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    // smooth signal: random sum of sinusoids per channel
    RealMatrix s(steps, channels), up(steps, channels), d(steps, channels);
    for (std::size_t c = 0; c < channels; ++c) {
      const double a1 = rng.uniform(0.5, 1.5), f1 = rng.uniform(0.05, 0.4), p1 = rng.uniform(0.0, 6.28);
      const double a2 = rng.uniform(0.1, 0.5), f2 = rng.uniform(0.3, 0.9), p2 = rng.uniform(0.0, 6.28);
      for (std::size_t t = 0; t < steps; ++t)
        s(t, c) = a1 * std::sin(f1 * t + p1) + a2 * std::cos(f2 * t + p2);
    }
    for (auto& x : up.flat()) x = rng.uniform(-1.0, 1.0);
    for (auto& x : d.flat()) x = off_grid(rng, 0.0, 20.0, 1e-3, false);
    const auto g = delayed_read_backward(up, s, trace_for_delays(d));
    // Loss = sum(up * read). Differences are taken per output element so the
    // unaffected terms cancel exactly instead of adding roundoff.
    for (std::size_t k = 0; k < d.flat().size(); ++k) {
      auto p = d, m = d;
      p.flat()[k] += h;
      m.flat()[k] -= h;
      const auto rp = delayed_read(s, p), rm = delayed_read(s, m);
      double diff = 0.0;
      for (std::size_t i = 0; i < rp.flat().size(); ++i)
        diff += up.flat()[i] * (rp.flat()[i] - rm.flat()[i]);
      const double fd = diff / (2 * h);
      worst = std::max(worst, rel_err(g.grad_d.flat()[k], fd));
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0,
          std::to_string(checked) + " delays, max rel err " + fmt("%.2e", worst) + " (< 1e-4), " +
              fmt("%.2f s", secs) + " (< 10 s)"};
}

// ---------------------------------------------------------------- 2
Outcome sign_case_table() {
  bool ok = true;
  std::string cases;
  const double up = 1.375;
  for (int a = 0; a <= 1; ++a) {
    for (int b = 0; b <= 1; ++b) {
      // read at t=5 with d=2.25: t'=2.75, floor 2, ceil 3
      RealMatrix s(6, 1), u(6, 1), d(6, 1);
      s(2, 0) = a;
      s(3, 0) = b;
      u(5, 0) = up;
      d.fill(2.25);
      const double g = delayed_read_backward(u, s, trace_for_delays(d)).grad_d(5, 0);
      const double want = a == 1 && b == 0 ? up : (a == 0 && b == 1 ? -up : 0.0);
      ok = ok && g == want;
      cases += " (" + std::to_string(a) + "," + std::to_string(b) + ")->" + fmt("%+g", g / up) + "u";
    }
  }
  return {ok, "floor/ceil spikes" + cases};
}

// ---------------------------------------------------------------- 3
Outcome slope_and_time_map() {
  Rng rng(77);
  std::size_t slope_viol = 0, map_viol = 0;
  double min_margin = 1.0, worst_deficit = 0.0;
  for (int seq = 0; seq < 1000; ++seq) {
    const auto steps = static_cast<std::size_t>(rng.uniform_int(2, 200));
    std::vector<double> raw(steps);
    switch (seq % 4) {
      case 0:  // white noise of random amplitude
        for (auto& x : raw) x = rng.uniform(-1.0, 1.0) * rng.uniform(0.0, 30.0);
        break;
      case 1:  // steps and spikes
        for (auto& x : raw) x = rng.bernoulli(0.2) ? rng.uniform(0.0, 25.0) : 0.0;
        break;
      case 2: {  // random walk with large increments
        double v = 0.0;
        for (auto& x : raw) x = (v += rng.uniform(-3.0, 3.0));
        break;
      }
      default: {  // shifts of the form the engine produces
        const double scale = rng.uniform(0.0, 1.0);
        for (auto& x : raw) x = scale * 25.0 * std::tanh(rng.uniform(0.0, 1.0));
      }
    }
    const auto lim = slope_limit(raw);
    for (std::size_t t = 1; t < lim.size(); ++t)
      if (!(std::abs(lim[t] - lim[t - 1]) <= 0.99)) ++slope_viol;
    const auto rep = check_time_map(lim);
    map_viol += rep.violations;
    // Margin of the emission-time map t - d(t) between adjacent steps, in the
    // algebraic form 1 - (d[t] - d[t-1]). The form that first subtracts from t
    // is tracked separately; it rounds t - d[t] and can dip below by an ulp.
    for (std::size_t t = 1; t < lim.size(); ++t) {
      const double margin = 1.0 - (lim[t] - lim[t - 1]);
      min_margin = std::min(min_margin, margin);
      if (!(margin >= 0.01)) ++map_viol;
      const double shifted = (static_cast<double>(t) - lim[t]) - (static_cast<double>(t - 1) - lim[t - 1]);
      worst_deficit = std::max(worst_deficit, 0.01 - shifted);
    }
  }
  return {slope_viol == 0 && map_viol == 0,
          "1000 sequences, slope violations " + std::to_string(slope_viol) + ", time-map violations " +
              std::to_string(map_viol) + ", min margin " + fmt("%.17g", min_margin) +
              ", t-d form off by at most " + fmt("%.1e", worst_deficit)};
}

// ---------------------------------------------------------------- 4
Outcome annealing_endpoints() {
  struct Case { double smax, smin; int e; };
  const Case cases[] = {{0.5, 0.1, 70}, {0.3, 0.02, 30}, {0.2, 0.01, 50}, {0.5, 0.1, 1}, {0.9, 0.3, 7}};
  bool ok = true;
  double worst = 0.0;
  for (const auto& c : cases) {
    ok = ok && anneal_scale(0, c.smax, c.smin, c.e) == c.smax;
    const double end = std::abs(anneal_scale(c.e, c.smax, c.smin, c.e) - c.smin);
    worst = std::max(worst, end);
    ok = ok && end <= 1e-12;
    for (int epoch = 0; epoch <= 200; ++epoch) ok = ok && anneal_scale(epoch, c.smax, c.smin, 0) == c.smin;
  }
  return {ok, "S(0)=S_max exact, |S(E)-S_min| max " + fmt("%.1e", worst) + ", E=0 pins S_min for epochs 0..200"};
}

// ---------------------------------------------------------------- 5
Outcome mode_reductions() {
  int dyn_static = 0, static_none = 0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng rng(derive_seed(500, "mode-reduction", k));
    const std::size_t c = static_cast<std::size_t>(rng.uniform_int(3, 12));
    const std::vector<std::size_t> hidden{static_cast<std::size_t>(rng.uniform_int(4, 20)),
                                          static_cast<std::size_t>(rng.uniform_int(4, 20))};
    const std::size_t classes = static_cast<std::size_t>(rng.uniform_int(2, 5));
    const std::size_t steps = static_cast<std::size_t>(rng.uniform_int(10, 40));
    const auto readout = static_cast<Readout>(k % 3);
    DelayConfig zero;
    zero.s_max = 0.0;
    zero.s_min = 0.0;
    zero.e_decay = 0;
    zero.d_max = rng.uniform(5.0, 25.0);
    zero.k_smooth = static_cast<int>(rng.uniform_int(1, 20));
    zero.nonlinearity = static_cast<Nonlinearity>(k % 4 == 1 ? 0 : k % 4);  // sigmoid would not rest at 0 anyway with S=0
    NeuronConfig n;
    n.leak = rng.uniform(0.2, 0.9);
    auto dyn = Network::initialize(NetworkSpec::feedforward(c, hidden, classes, DelayMode::dynamic, 0.0, readout),
                                   n, zero, derive_seed(600, "net", k), 2.0);
    SpikeTensor batch;
    for (int b = 0; b < 3; ++b) batch.push_back(binary_signal(rng, steps, c, 0.3));
    RealMatrix lg(3, classes);
    for (auto& x : lg.flat()) x = rng.uniform(-1.0, 1.0);
    ForwardOptions fo;
    fo.epoch = static_cast<int>(k);

    auto as_mode = [](Network net, DelayMode m) {
      for (auto& l : net.spec.layers) l.delay_mode = m;
      net.delay.mode = m;
      return net;
    };
    const auto fixed = as_mode(dyn, DelayMode::fixed);
    const auto fd = network_forward(dyn, batch, fo);
    const auto ff = network_forward(fixed, batch, fo);
    if (fd.scores == ff.scores &&
        network_backward(dyn, fd, lg).weights == network_backward(fixed, ff, lg).weights)
      ++dyn_static;

    auto fixed0 = fixed;
    for (auto& d : fixed0.params.delays) std::fill(d.d_base.begin(), d.d_base.end(), 0.0);
    const auto none = as_mode(fixed0, DelayMode::none);
    const auto f0 = network_forward(fixed0, batch, fo);
    const auto fn = network_forward(none, batch, fo);
    if (f0.scores == fn.scores &&
        network_backward(fixed0, f0, lg).weights == network_backward(none, fn, lg).weights)
      ++static_none;
  }
  return {dyn_static == 10 && static_none == 10,
          "dynamic(S=0)==static " + std::to_string(dyn_static) + "/10, static(d=0)==none " +
              std::to_string(static_none) + "/10 (bitwise scores and weight gradients)"};
}

// ---------------------------------------------------------------- 6
Outcome interpolation_identities() {
  Rng rng(31);
  int ok_shift = 0, ok_identity = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t steps = 40, channels = 6;
    const auto s = binary_signal(rng, steps, channels, 0.4);
    RealMatrix d(steps, channels);
    for (auto& x : d.flat()) x = static_cast<double>(rng.uniform_int(0, 30));
    const auto out = delayed_read(s, d);
    bool exact = true;
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t c = 0; c < channels; ++c) {
        const long src = static_cast<long>(t) - static_cast<long>(d(t, c));
        const double want = src < 0 ? 0.0 : s(static_cast<std::size_t>(src), c);
        exact = exact && out(t, c) == want;
      }
    ok_shift += exact;
    ok_identity += delayed_read(s, RealMatrix(steps, channels)) == s;
  }
  return {ok_shift == 50 && ok_identity == 50,
          "integer delays exact shift " + std::to_string(ok_shift) + "/50, d=0 identity " +
              std::to_string(ok_identity) + "/50"};
}

// ---------------------------------------------------------------- 7
struct NetFd {
  double worst = 0.0;
  std::size_t checked = 0;
};

NetFd network_fd(DelayMode mode, std::uint64_t seed) {
  NeuronConfig n;
  n.spike_fn = SpikeFunction::relaxed;
  DelayConfig dc;
  dc.mode = mode;
  dc.k_smooth = 5;
  dc.grad_through_congestion = true;  // exact gradient of the dynamic forward pass
  const std::vector<std::size_t> hidden{16};
  auto net = Network::initialize(NetworkSpec::feedforward(8, hidden, 3, mode, 0.0, Readout::mean_membrane),
                                 n, dc, seed, 2.0);
  Rng rng(derive_seed(seed, "fd"));
  if (mode != DelayMode::none)
    for (auto& d : net.params.delays)
      for (auto& x : d.d_base) x = off_grid(rng, 1.0, 8.0, 0.05, true);
  SpikeTensor batch;
  std::vector<int> labels;
  for (int b = 0; b < 2; ++b) {
    RealMatrix x(32, 8);
    for (auto& v : x.flat()) v = rng.uniform(0.0, 1.0);
    batch.push_back(std::move(x));
    labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
  }
  const ForwardOptions fo;
  // Independent loss: mean softmax cross-entropy written out here.
  auto loss_of = [&](const Network& nn) {
    const auto s = network_forward(nn, batch, fo).scores;
    double l = 0.0;
    for (std::size_t b = 0; b < s.rows(); ++b) {
      double mx = s(b, 0);
      for (std::size_t k = 1; k < s.cols(); ++k) mx = std::max(mx, s(b, k));
      double z = 0.0;
      for (std::size_t k = 0; k < s.cols(); ++k) z += std::exp(s(b, k) - mx);
      l += -(s(b, static_cast<std::size_t>(labels[b])) - mx - std::log(z));
    }
    return l / static_cast<double>(s.rows());
  };
  const auto fwd = network_forward(net, batch, fo);
  RealMatrix lg(fwd.scores.rows(), fwd.scores.cols());
  for (std::size_t b = 0; b < lg.rows(); ++b) {
    double mx = fwd.scores(b, 0);
    for (std::size_t k = 1; k < lg.cols(); ++k) mx = std::max(mx, fwd.scores(b, k));
    double z = 0.0;
    for (std::size_t k = 0; k < lg.cols(); ++k) z += std::exp(fwd.scores(b, k) - mx);
    for (std::size_t k = 0; k < lg.cols(); ++k)
      lg(b, k) = (std::exp(fwd.scores(b, k) - mx) / z - (static_cast<int>(k) == labels[b] ? 1.0 : 0.0)) /
                 static_cast<double>(lg.rows());
  }
  const auto grads = network_backward(net, fwd, lg);
  NetFd r;
  const double h = 1e-5;
  auto probe = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double a = loss_of(net);
    p = saved - h;
    const double b = loss_of(net);
    p = saved;
    r.worst = std::max(r.worst, rel_err(analytic, (a - b) / (2 * h)));
    ++r.checked;
  };
  for (std::size_t l = 0; l < net.params.weights.size(); ++l)
    for (std::size_t i = 0; i < net.params.weights[l].size(); ++i)
      probe(net.params.weights[l].flat()[i], grads.weights[l].flat()[i]);
  if (mode != DelayMode::none)
    for (std::size_t l = 0; l < net.params.delays.size(); ++l)
      for (std::size_t j = 0; j < net.params.delays[l].channels(); ++j)
        probe(net.params.delays[l].d_base[j], grads.d_base[l][j]);
  return r;
}

Outcome full_network_gradient() {
  const auto t0 = Clock::now();
  const auto s = network_fd(DelayMode::fixed, 71);
  const auto d = network_fd(DelayMode::dynamic, 72);
  const double secs = seconds_since(t0);
  const double worst = std::max(s.worst, d.worst);
  return {worst < 1e-3 && secs < 60.0,
          std::to_string(s.checked + d.checked) + " params (static+dynamic), max rel err " +
              fmt("%.2e", worst) + " (< 1e-3), " + fmt("%.1f s", secs) + " (< 60 s)"};
}

// ---------------------------------------------------------------- 8-10
struct Ablation {
  std::vector<RunSummary> runs;
  std::vector<std::uint64_t> seeds;
  double max_seconds = 0.0;
  RunConfig cfg;
};

Ablation run_ablation() {
  Ablation a;
  a.cfg = resolve_config({}, {});  // shipped defaults: jitter 2, burst_prob 0.2
  a.seeds = {0, 1, 2, 3, 4};
  const auto data = build_datasets(a.cfg);
  for (auto seed : a.seeds) {
    for (auto mode : {DelayMode::none, DelayMode::fixed, DelayMode::dynamic}) {
      a.runs.push_back(run_single(a.cfg, data, mode, seed));
      const auto& r = a.runs.back();
      a.max_seconds = std::max(a.max_seconds, r.seconds);
      std::printf("      run %-7s seed %llu  acc %.4f  acc(interp) %.4f  u_sum %.1f  ovf/spike %.4f  %.1f s\n",
                  std::string(to_string(mode)).c_str(), static_cast<unsigned long long>(seed),
                  r.eval_accuracy, r.eval_accuracy_continuous, r.dynamics.total.u,
                  r.dynamics.total.overflow_per_spike, r.seconds);
      std::fflush(stdout);
    }
  }
  return a;
}

double mean_acc(const Ablation& a, DelayMode m, bool continuous) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : a.runs)
    if (r.mode == m) {
      s += continuous ? r.eval_accuracy_continuous : r.eval_accuracy;
      ++n;
    }
  return s / n;
}

const RunSummary& find_run(const Ablation& a, DelayMode m, std::uint64_t seed) {
  for (const auto& r : a.runs)
    if (r.mode == m && r.seed == seed) return r;
  throw std::logic_error("missing run");
}

Outcome ablation_direction(const Ablation& a) {
  const double none = mean_acc(a, DelayMode::none, false);
  const double fixed = mean_acc(a, DelayMode::fixed, false);
  const double dyn = mean_acc(a, DelayMode::dynamic, false);
  const bool ok = dyn >= fixed && fixed >= none && (dyn - none) >= 0.10 && a.max_seconds < 300.0;
  return {ok, "mean acc dynamic " + fmt("%.4f", dyn) + " static " + fmt("%.4f", fixed) + " none " +
                  fmt("%.4f", none) + ", dyn-none " + fmt("%.1f pp", 100 * (dyn - none)) +
                  " (>= 10), slowest run " + fmt("%.1f s", a.max_seconds)};
}

Outcome congestion_direction(const Ablation& a) {
  int lower = 0;
  double ops_dyn = 0.0, ops_static = 0.0;
  for (auto seed : a.seeds) {
    const auto& d = find_run(a, DelayMode::dynamic, seed).dynamics.total;
    const auto& s = find_run(a, DelayMode::fixed, seed).dynamics.total;
    lower += d.u < s.u;
    ops_dyn += d.overflow_per_spike;
    ops_static += s.overflow_per_spike;
  }
  const auto n = static_cast<double>(a.seeds.size());
  ops_dyn /= n;
  ops_static /= n;
  return {lower >= 4 && ops_dyn <= ops_static,
          "u_dyn < u_static in " + std::to_string(lower) + "/5 seed pairs (>= 4); mean ovf/spike dynamic " +
              fmt("%.4f", ops_dyn) + " vs static " + fmt("%.4f", ops_static)};
}

Outcome discretization_gap(const Ablation& a) {
  double gap = 0.0;
  int n = 0;
  for (const auto& r : a.runs) {
    if (r.mode == DelayMode::none) continue;
    gap += r.eval_accuracy - r.eval_accuracy_continuous;
    ++n;
  }
  gap /= n;
  const double gs = mean_acc(a, DelayMode::fixed, false) - mean_acc(a, DelayMode::fixed, true);
  const double gd = mean_acc(a, DelayMode::dynamic, false) - mean_acc(a, DelayMode::dynamic, true);
  return {std::abs(gap) <= 0.02 && std::abs(gs) <= 0.02 && std::abs(gd) <= 0.02,
          "integer minus interpolated accuracy: static " + fmt("%+.1f pp", 100 * gs) + ", dynamic " +
              fmt("%+.1f pp", 100 * gd) + " (|.| <= 2)"};
}

// ---------------------------------------------------------------- 11
Outcome determinism_and_checkpoint() {
  auto cfg = resolve_config({}, {{"synth.n_train", "96"}, {"synth.n_eval", "32"}, {"train.epochs", "3"},
                                 {"network.hidden", "24,16"}, {"run.seed", "17"}});
  const auto data = build_datasets(cfg);
  auto log_csv = [&] {
    std::string csv = train_log_header(cfg.hidden.size());
    TrainHooks hooks;
    hooks.on_log = [&](const TrainLogRow& row) { csv += train_log_line(row, cfg.hidden.size()); };
    const auto run = run_single(cfg, data, DelayMode::dynamic, cfg.seed, hooks);
    return std::make_pair(csv, run);
  };
  const auto [log_a, run_a] = log_csv();
  const auto [log_b, run_b] = log_csv();

  const auto path = std::filesystem::temp_directory_path() / "cadad_acceptance_ckpt.json";
  const int epoch = run_a.result.best_epoch;
  save_checkpoint({run_a.result.best, epoch, cfg.seed, cfg.binning.dt_ms, cfg.binning.steps}, path);
  const auto loaded = load_checkpoint(path);
  std::filesystem::remove(path);
  ForwardOptions fo;
  fo.epoch = epoch;
  fo.discretize_delays = true;
  const auto before = evaluate(run_a.result.best, data.eval, fo).scores;
  const auto after = evaluate(loaded.net, data.eval, fo).scores;
  fo.discretize_delays = false;
  const bool cont_same = evaluate(run_a.result.best, data.eval, fo).scores == evaluate(loaded.net, data.eval, fo).scores;
  const bool ok = log_a == log_b && before == after && cont_same && loaded.epoch == epoch;
  return {ok, std::string("training log byte-equal: ") + (log_a == log_b ? "yes" : "no") + " (" +
                  std::to_string(log_a.size()) + " bytes); reloaded eval scores identical: " +
                  (before == after && cont_same ? "yes" : "no")};
}

// ---------------------------------------------------------------- 12
Outcome nonlinearity_plumbing() {
  bool ok = true;
  std::string detail;
  const std::vector<double> rest{0.0};
  for (auto nl : {Nonlinearity::tanh, Nonlinearity::sigmoid, Nonlinearity::relu, Nonlinearity::arctan}) {
    auto cfg = resolve_config({}, {{"synth.n_train", "64"}, {"synth.n_eval", "32"}, {"train.epochs", "2"},
                                   {"network.hidden", "24"}, {"delay.nonlinearity", std::string(to_string(nl))}});
    const auto data = build_datasets(cfg);
    const auto run = run_single(cfg, data, DelayMode::dynamic, 5);
    bool finite = std::isfinite(run.eval_accuracy);
    for (const auto& row : run.result.log) finite = finite && std::isfinite(row.loss);

    // Resting shift from the engine on a silent input, and from raw_shift directly.
    const auto& net = run.result.best;
    const RealMatrix silent(data.train.samples[0].rows(), data.train.samples[0].cols());
    const auto fwd = network_forward(net, SpikeTensor{silent}, ForwardOptions{});
    const double engine_rest = fwd.samples[0].layers[0].trace.d_shift_raw[0];
    const double scale = anneal_scale(0, cfg.delay.s_max, cfg.delay.s_min, cfg.delay.e_decay);
    const double direct = raw_shift(rest, scale, cfg.delay.gamma, cfg.delay.d_max, nl)[0];
    const bool rest_ok = nl == Nonlinearity::sigmoid
                             ? (engine_rest > 0.0 && direct > 0.0 &&
                                std::abs(direct - 0.5 * scale * cfg.delay.d_max) <= 1e-12)
                             : (engine_rest == 0.0 && direct == 0.0);
    ok = ok && finite && rest_ok;
    detail += std::string(to_string(nl)) + ": rest " + fmt("%.4g", engine_rest) + ", acc " +
              fmt("%.3f", run.eval_accuracy) + "; ";
  }
  return {ok, detail};
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  report(1, "delay gradient vs finite differences", delay_gradient_fd());
  report(2, "delay gradient sign cases", sign_case_table());
  report(3, "slope limiter and time-map invariants", slope_and_time_map());
  report(4, "annealing endpoints", annealing_endpoints());
  report(5, "mode-reduction identities", mode_reductions());
  report(6, "interpolation identities", interpolation_identities());
  report(7, "full-network gradient check", full_network_gradient());
  std::printf("      training none/static/dynamic on the synthetic burst task, seeds 0-4\n");
  const auto ab = run_ablation();
  report(8, "ablation direction", ablation_direction(ab));
  report(9, "congestion reduction direction", congestion_direction(ab));
  report(10, "inference discretization", discretization_gap(ab));
  report(11, "determinism and checkpoint round trip", determinism_and_checkpoint());
  report(12, "nonlinearity plumbing", nonlinearity_plumbing());
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
