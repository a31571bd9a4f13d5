#include "cadad/delay_engine.hpp"

#include <algorithm>
#include <cmath>

#include "cadad/csv.hpp"

namespace cadad {

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "tanh") return Nonlinearity::tanh;
  if (name == "sigmoid") return Nonlinearity::sigmoid;
  if (name == "relu") return Nonlinearity::relu;
  if (name == "arctan") return Nonlinearity::arctan;
  throw ConfigError("unknown nonlinearity '" + std::string(name) + "'");
}

std::string_view to_string(Nonlinearity nl) {
  switch (nl) {
    case Nonlinearity::tanh: return "tanh";
    case Nonlinearity::sigmoid: return "sigmoid";
    case Nonlinearity::relu: return "relu";
    case Nonlinearity::arctan: return "arctan";
  }
  return "?";
}

DelayMode parse_delay_mode(std::string_view name) {
  if (name == "none") return DelayMode::none;
  if (name == "static") return DelayMode::fixed;
  if (name == "dynamic") return DelayMode::dynamic;
  throw ConfigError("unknown delay mode '" + std::string(name) + "'");
}

std::string_view to_string(DelayMode mode) {
  switch (mode) {
    case DelayMode::none: return "none";
    case DelayMode::fixed: return "static";
    case DelayMode::dynamic: return "dynamic";
  }
  return "?";
}

void DelayConfig::validate() const {
  if (!(d_max > 0.0)) throw ConfigError("delay.d_max must be positive");
  if (!(gamma > 0.0)) throw ConfigError("delay.gamma must be positive");
  if (k_smooth < 1) throw ConfigError("delay.k_smooth must be >= 1");
  if (!(s_max > 0.0 && s_max <= 1.0) && !(s_max == 0.0 && s_min == 0.0))
    throw ConfigError("delay.s_max must lie in (0, 1]");
  if (!(s_min >= 0.0 && s_min <= s_max)) throw ConfigError("delay.s_min must lie in [0, s_max]");
  if (e_decay < 0) throw ConfigError("delay.e_decay must be >= 0");
}

void DelayParams::project(double d_max) {
  for (auto& d : d_base) d = std::clamp(d, 0.0, d_max);
}

namespace {

inline long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

}  // namespace

std::vector<double> congestion_raw(const RealMatrix& spikes, std::span<const double> d_base) {
  require(spikes.cols() == d_base.size(), "congestion_raw: d_base length differs from channels");
  require(spikes.rows() >= 1 && spikes.cols() >= 1, "congestion_raw: empty input");
  const auto steps = static_cast<long>(spikes.rows());
  const auto channels = spikes.cols();
  std::vector<long> lag(channels);
  for (std::size_t j = 0; j < channels; ++j) lag[j] = round_half_up(d_base[j]);

  std::vector<double> a(spikes.rows(), 0.0);
  for (long t = 0; t < steps; ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < channels; ++j) {
      const long src = t - lag[j];
      if (src >= 0 && src < steps) sum += spikes(static_cast<std::size_t>(src), j);
    }
    a[static_cast<std::size_t>(t)] = sum / static_cast<double>(channels);
  }
  return a;
}

std::vector<double> smooth(std::span<const double> a_raw, int k_smooth) {
  require(k_smooth >= 1, "smooth: window must be >= 1");
  const auto k = static_cast<std::size_t>(k_smooth);
  std::vector<double> out(a_raw.size(), 0.0);
  for (std::size_t t = 0; t < a_raw.size(); ++t) {
    const std::size_t lo = t + 1 >= k ? t + 1 - k : 0;
    double sum = 0.0;
    for (std::size_t i = lo; i <= t; ++i) sum += a_raw[i];
    out[t] = sum / static_cast<double>(k);
  }
  return out;
}

double anneal_scale(int epoch, double s_max, double s_min, int e_decay) {
  require(epoch >= 0 && e_decay >= 0, "anneal_scale: epoch and e_decay must be nonnegative");
  require(s_min <= s_max, "anneal_scale: s_min exceeds s_max");
  if (e_decay == 0) return s_min;
  if (epoch == 0) return s_max;
  // s_max == 0 forces s_min == 0 and the whole schedule is identically zero.
  if (s_max == 0.0) return 0.0;
  const double decayed =
      s_max * std::pow(s_min / s_max, static_cast<double>(epoch) / static_cast<double>(e_decay));
  return std::max(decayed, s_min);
}

double apply_nonlinearity(Nonlinearity nl, double x) {
  switch (nl) {
    case Nonlinearity::tanh: return std::tanh(x);
    case Nonlinearity::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Nonlinearity::relu: return x > 0.0 ? x : 0.0;
    case Nonlinearity::arctan: return std::atan(x);
  }
  throw ConfigError("unknown nonlinearity");
}

double nonlinearity_derivative(Nonlinearity nl, double x) {
  switch (nl) {
    case Nonlinearity::tanh: {
      const double y = std::tanh(x);
      return 1.0 - y * y;
    }
    case Nonlinearity::sigmoid: {
      const double y = 1.0 / (1.0 + std::exp(-x));
      return y * (1.0 - y);
    }
    case Nonlinearity::relu: return x > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::arctan: return 1.0 / (1.0 + x * x);
  }
  throw ConfigError("unknown nonlinearity");
}

std::vector<double> raw_shift(std::span<const double> a_smooth, double scale, double gamma,
                              double d_max, Nonlinearity nl) {
  require(scale >= 0.0, "raw_shift: scale must be nonnegative");
  std::vector<double> out(a_smooth.size());
  for (std::size_t t = 0; t < a_smooth.size(); ++t)
    out[t] = scale * d_max * apply_nonlinearity(nl, gamma * a_smooth[t]);
  return out;
}

std::vector<double> slope_limit(std::span<const double> d_shift_raw) {
  require(!d_shift_raw.empty(), "slope_limit: empty sequence");
  std::vector<double> out(d_shift_raw.size());
  out[0] = d_shift_raw[0];
  for (std::size_t t = 1; t < d_shift_raw.size(); ++t) {
    const double prev = out[t - 1];
    const double step =
        std::clamp(d_shift_raw[t] - d_shift_raw[t - 1], -kMaxShiftSlope, kMaxShiftSlope);
    double next = prev + step;
    // The sum can round past the bound by an ulp; pull it back so the
    // computed difference honours the limit exactly.
    while (next - prev > kMaxShiftSlope) next = std::nextafter(next, -INFINITY);
    while (next - prev < -kMaxShiftSlope) next = std::nextafter(next, INFINITY);
    out[t] = next;
  }
  return out;
}

RealMatrix effective_delay(std::span<const double> d_base, std::span<const double> d_shift,
                           double d_max) {
  RealMatrix d(d_shift.size(), d_base.size());
  for (std::size_t t = 0; t < d_shift.size(); ++t)
    for (std::size_t j = 0; j < d_base.size(); ++j)
      d(t, j) = std::clamp(d_base[j] + d_shift[t], 0.0, d_max);
  return d;
}

IndexMatrix discretize_for_inference(const RealMatrix& d) {
  IndexMatrix out(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.size(); ++i) out.flat()[i] = round_half_up(d.flat()[i]);
  return out;
}

TimeMapReport check_time_map(std::span<const double> d_shift) {
  TimeMapReport report;
  for (std::size_t t = 1; t < d_shift.size(); ++t) {
    const double margin = 1.0 - (d_shift[t] - d_shift[t - 1]);
    report.min_margin = std::min(report.min_margin, margin);
    if (!(margin >= kMinTimeMapMargin)) ++report.violations;
  }
  report.ok = report.violations == 0;
  return report;
}

namespace {

void fill_indices(DelayTrace& trace, bool discretize) {
  const auto steps = trace.d_eff.rows();
  const auto channels = trace.d_eff.cols();
  trace.frac = RealMatrix(steps, channels);
  trace.floor_idx = IndexMatrix(steps, channels);
  trace.ceil_idx = IndexMatrix(steps, channels);
  trace.discretized = discretize;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < channels; ++j) {
      const double d = trace.d_eff(t, j);
      if (d < 0.0) throw ContractError("delayed read: negative delay");
      if (discretize) {
        const long idx = static_cast<long>(t) - round_half_up(d);
        trace.floor_idx(t, j) = idx;
        trace.ceil_idx(t, j) = idx;
        continue;
      }
      const double src = static_cast<double>(t) - d;
      const double lo = std::floor(src);
      const double frac = src - lo;
      trace.floor_idx(t, j) = static_cast<long>(lo);
      trace.ceil_idx(t, j) = frac > 0.0 ? static_cast<long>(lo) + 1 : static_cast<long>(lo);
      trace.frac(t, j) = frac;
    }
  }
}

inline double at(const RealMatrix& s, long t, std::size_t j) {
  return t >= 0 ? s(static_cast<std::size_t>(t), j) : 0.0;
}

}  // namespace

DelayTrace build_trace(const RealMatrix& spikes, std::span<const double> d_base,
                       const DelayConfig& cfg, int epoch, bool discretize) {
  require(spikes.cols() == d_base.size(), "build_trace: d_base length differs from channels");
  const auto steps = spikes.rows();
  DelayTrace trace;
  trace.a_raw.assign(steps, 0.0);
  trace.a_smooth.assign(steps, 0.0);
  trace.d_shift_raw.assign(steps, 0.0);
  trace.d_shift.assign(steps, 0.0);

  if (cfg.mode == DelayMode::dynamic) {
    trace.scale = anneal_scale(epoch, cfg.s_max, cfg.s_min, cfg.e_decay);
    trace.a_raw = congestion_raw(spikes, d_base);
    trace.a_smooth = smooth(trace.a_raw, cfg.k_smooth);
    trace.d_shift_raw =
        raw_shift(trace.a_smooth, trace.scale, cfg.gamma, cfg.d_max, cfg.nonlinearity);
    trace.d_shift = slope_limit(trace.d_shift_raw);
  }
  if (cfg.mode == DelayMode::none) {
    trace.d_eff = RealMatrix(steps, spikes.cols(), 0.0);
  } else {
    trace.d_eff = effective_delay(d_base, trace.d_shift, cfg.d_max);
  }
  fill_indices(trace, discretize);
  return trace;
}

RealMatrix delayed_read(const RealMatrix& signal, const DelayTrace& trace) {
  require(signal.rows() == trace.steps() && signal.cols() == trace.channels(),
          "delayed_read: trace/signal shape mismatch");
  RealMatrix out(signal.rows(), signal.cols());
  for (std::size_t t = 0; t < signal.rows(); ++t) {
    for (std::size_t j = 0; j < signal.cols(); ++j) {
      const double frac = trace.frac(t, j);
      out(t, j) = (1.0 - frac) * at(signal, trace.floor_idx(t, j), j) +
                  frac * at(signal, trace.ceil_idx(t, j), j);
    }
  }
  return out;
}

DelayTrace trace_for_delays(const RealMatrix& d, bool discretize) {
  DelayTrace trace;
  trace.d_eff = d;
  trace.a_raw.assign(d.rows(), 0.0);
  trace.a_smooth.assign(d.rows(), 0.0);
  trace.d_shift_raw.assign(d.rows(), 0.0);
  trace.d_shift.assign(d.rows(), 0.0);
  fill_indices(trace, discretize);
  return trace;
}

RealMatrix delayed_read(const RealMatrix& signal, const RealMatrix& d) {
  require(signal.same_shape(d), "delayed_read: delay/signal shape mismatch");
  return delayed_read(signal, trace_for_delays(d));
}

DelayedReadGrad delayed_read_backward(const RealMatrix& upstream, const RealMatrix& signal,
                                      const DelayTrace& trace) {
  require(upstream.same_shape(signal) && signal.rows() == trace.steps() &&
              signal.cols() == trace.channels(),
          "delayed_read_backward: trace/signal shape mismatch");
  DelayedReadGrad g{RealMatrix(signal.rows(), signal.cols()),
                    RealMatrix(signal.rows(), signal.cols())};
  for (std::size_t t = 0; t < signal.rows(); ++t) {
    for (std::size_t j = 0; j < signal.cols(); ++j) {
      const double up = upstream(t, j);
      if (up == 0.0) continue;
      const long lo = trace.floor_idx(t, j);
      const long hi = trace.ceil_idx(t, j);
      const double frac = trace.frac(t, j);
      g.grad_d(t, j) = up * (at(signal, lo, j) - at(signal, hi, j));
      if (lo >= 0) g.grad_signal(static_cast<std::size_t>(lo), j) += up * (1.0 - frac);
      if (hi >= 0 && frac > 0.0) g.grad_signal(static_cast<std::size_t>(hi), j) += up * frac;
    }
  }
  return g;
}

std::vector<double> route_delay_grad(const RealMatrix& grad_d, std::span<const double> d_base,
                                     const DelayTrace& trace, double d_max,
                                     std::vector<double>* grad_shift) {
  require(grad_d.cols() == d_base.size() && grad_d.rows() == trace.d_shift.size(),
          "route_delay_grad: shape mismatch");
  std::vector<double> grad_base(d_base.size(), 0.0);
  if (grad_shift) grad_shift->assign(grad_d.rows(), 0.0);
  for (std::size_t t = 0; t < grad_d.rows(); ++t) {
    for (std::size_t j = 0; j < grad_d.cols(); ++j) {
      const double raw = d_base[j] + trace.d_shift[t];
      // Straight-through inside the clamp range, blocked where it clips.
      if (raw < 0.0 || raw > d_max) continue;
      grad_base[j] += grad_d(t, j);
      if (grad_shift) (*grad_shift)[t] += grad_d(t, j);
    }
  }
  return grad_base;
}

void congestion_backward(std::span<const double> grad_shift, std::span<const double> d_base,
                         const DelayTrace& trace, const DelayConfig& cfg,
                         RealMatrix& grad_signal) {
  const auto steps = trace.d_shift.size();
  require(grad_shift.size() == steps && grad_signal.rows() == steps &&
              grad_signal.cols() == d_base.size(),
          "congestion_backward: shape mismatch");

  // slope_limit
  std::vector<double> g_limited(grad_shift.begin(), grad_shift.end());
  std::vector<double> g_raw(steps, 0.0);
  for (std::size_t t = steps; t-- > 1;) {
    const double inc = trace.d_shift_raw[t] - trace.d_shift_raw[t - 1];
    if (std::abs(inc) <= kMaxShiftSlope) {
      g_raw[t] += g_limited[t];
      g_raw[t - 1] -= g_limited[t];
    }
    g_limited[t - 1] += g_limited[t];
  }
  if (steps > 0) g_raw[0] += g_limited[0];

  // raw_shift
  std::vector<double> g_smooth(steps);
  for (std::size_t t = 0; t < steps; ++t)
    g_smooth[t] = g_raw[t] * trace.scale * cfg.d_max * cfg.gamma *
                  nonlinearity_derivative(cfg.nonlinearity, cfg.gamma * trace.a_smooth[t]);

  // smooth
  const auto k = static_cast<std::size_t>(cfg.k_smooth);
  std::vector<double> g_a(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t lo = t + 1 >= k ? t + 1 - k : 0;
    for (std::size_t i = lo; i <= t; ++i) g_a[i] += g_smooth[t] / static_cast<double>(k);
  }

  // congestion_raw
  const auto channels = d_base.size();
  for (std::size_t t = 0; t < steps; ++t) {
    if (g_a[t] == 0.0) continue;
    const double g = g_a[t] / static_cast<double>(channels);
    for (std::size_t j = 0; j < channels; ++j) {
      const long src = static_cast<long>(t) - round_half_up(d_base[j]);
      if (src >= 0 && src < static_cast<long>(steps)) grad_signal(static_cast<std::size_t>(src), j) += g;
    }
  }
}

std::string delay_trace_csv(const DelayTrace& trace) {
  CsvWriter w;
  w.field("t").field("a_raw").field("a_smooth").field("d_shift").field("d_eff_min")
      .field("d_eff_max").end_row();
  for (std::size_t t = 0; t < trace.steps(); ++t) {
    const auto row = trace.d_eff.row(t);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    w.field(t).field(trace.a_raw[t]).field(trace.a_smooth[t]).field(trace.d_shift[t]);
    if (row.empty())
      w.empty_field().empty_field();
    else
      w.field(*lo).field(*hi);
    w.end_row();
  }
  return w.str();
}

}  // namespace cadad
