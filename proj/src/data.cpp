#include "cadad/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cadad/csv.hpp"
#include "cadad/rng.hpp"

namespace cadad {

void BinningConfig::validate() const {
  if (!(dt_ms > 0.0)) throw ConfigError("data.dt_ms must be positive");
  if (std::llround(dt_ms * 1000.0) <= 0) throw ConfigError("data.dt_ms below 1 microsecond");
  if (steps == 0) throw ConfigError("data.steps must be positive");
  if (channels == 0) throw ConfigError("binning channel count must be positive");
}

RealMatrix bin_events(const EventStream& stream, const BinningConfig& cfg) {
  cfg.validate();
  const auto dt_us = std::llround(cfg.dt_ms * 1000.0);
  RealMatrix frame(cfg.steps, cfg.channels);
  for (const auto& ev : stream.events) {
    if (ev.channel >= cfg.channels)
      throw std::out_of_range("bin_events: channel " + std::to_string(ev.channel) +
                              " >= " + std::to_string(cfg.channels));
    if (ev.time_us < 0) continue;
    const auto bin = static_cast<std::size_t>(ev.time_us / dt_us);
    if (bin >= cfg.steps) continue;
    double& cell = frame(bin, ev.channel);
    cell = cfg.clamp_binary ? 1.0 : cell + 1.0;
  }
  return frame;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
bool parse_int(std::string_view s, T& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

// "<digits>[.<1-3 digits>]" milliseconds -> exact microseconds.
bool parse_time_us(std::string_view s, std::int64_t& out) {
  const auto dot = s.find('.');
  const auto whole = s.substr(0, dot);
  if (whole.empty()) return false;
  std::int64_t ms = 0;
  if (!parse_int(whole, ms) || ms < 0) return false;
  std::int64_t frac = 0;
  if (dot != std::string_view::npos) {
    const auto digits = s.substr(dot + 1);
    if (digits.empty() || digits.size() > 3) return false;
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return false;
    parse_int(digits, frac);
    for (auto n = digits.size(); n < 3; ++n) frac *= 10;
  }
  out = ms * 1000 + frac;
  return true;
}

std::string format_time_ms(std::int64_t us) {
  std::string s = std::to_string(us / 1000);
  auto frac = us % 1000;
  if (frac != 0) {
    std::string f = std::to_string(frac);
    f.insert(0, 3 - f.size(), '0');
    while (f.back() == '0') f.pop_back();
    s += '.' + f;
  }
  return s;
}

bool parse_header_field(std::string_view tok, std::string_view key, std::size_t& out) {
  if (tok.substr(0, key.size()) != key) return false;
  return parse_int(tok.substr(key.size()), out);
}

}  // namespace

EventFile parse_event_file(const std::string& text, const WarningSink& warn) {
  EventFile file;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError("empty event file", 1);
  ++line_no;
  {
    const auto tok = split_ws(line);
    if (tok.size() != 5 || tok[0] != "#" || tok[1] != "events" || tok[2] != "v1" ||
        !parse_header_field(tok[3], "channels=", file.channels) ||
        !parse_header_field(tok[4], "classes=", file.classes) || file.channels == 0 ||
        file.classes == 0)
      throw ParseError("expected '# events v1 channels=<C> classes=<K>'", line_no);
  }

  EventStream* current = nullptr;
  bool sorted = true;
  auto finish = [&] {
    if (current && !sorted) {
      std::stable_sort(current->events.begin(), current->events.end(),
                       [](const Event& a, const Event& b) { return a.time_us < b.time_us; });
      if (warn) warn("sample " + std::to_string(current->id) + ": events were not time-sorted; sorted");
    }
    current = nullptr;
    sorted = true;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty()) {
      finish();
      continue;
    }
    if (!current) {
      EventStream s;
      int label = 0;
      if (tok.size() != 6 || tok[0] != "sample" || tok[2] != "label" || tok[4] != "duration_ms" ||
          !parse_int(tok[1], s.id) || !parse_int(tok[3], label) ||
          !parse_double(tok[5], s.duration_ms))
        throw ParseError("expected 'sample <id> label <k> duration_ms <d>'", line_no);
      if (label < 0 || static_cast<std::size_t>(label) >= file.classes)
        throw ParseError("label " + std::to_string(label) + " out of range", line_no);
      if (!(s.duration_ms > 0.0)) throw ParseError("duration_ms must be positive", line_no);
      s.label = label;
      file.streams.push_back(std::move(s));
      current = &file.streams.back();
      continue;
    }
    Event ev;
    if (tok.size() != 2 || !parse_time_us(tok[0], ev.time_us) || !parse_int(tok[1], ev.channel))
      throw ParseError("expected '<time_ms> <channel>'", line_no);
    if (ev.channel >= file.channels)
      throw ParseError("channel " + std::to_string(ev.channel) + " out of range", line_no);
    if (!current->events.empty() && ev.time_us < current->events.back().time_us) sorted = false;
    current->events.push_back(ev);
  }
  finish();
  return file;
}

EventFile load_event_file(const std::filesystem::path& path, const WarningSink& warn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read event file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_event_file(ss.str(), warn);
}

std::string format_event_file(const EventFile& file) {
  std::string out = "# events v1 channels=" + std::to_string(file.channels) +
                    " classes=" + std::to_string(file.classes) + "\n";
  for (const auto& s : file.streams) {
    out += "sample " + std::to_string(s.id) + " label " + std::to_string(s.label) +
           " duration_ms " + format_number(s.duration_ms) + "\n";
    for (const auto& ev : s.events)
      out += format_time_ms(ev.time_us) + " " + std::to_string(ev.channel) + "\n";
    out += "\n";
  }
  return out;
}

void save_event_file(const EventFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write event file " + path.string());
  out << format_event_file(file);
  if (!out) throw IoError("failed writing event file " + path.string());
}

Dataset bin_dataset(const EventFile& file, const BinningConfig& cfg) {
  Dataset ds;
  ds.n_classes = file.classes;
  for (const auto& s : file.streams) {
    ds.samples.push_back(bin_events(s, cfg));
    ds.labels.push_back(s.label);
    ds.ids.push_back(s.id);
  }
  return ds;
}

void SynthConfig::validate() const {
  if (n_classes < 2) throw ConfigError("synth.n_classes must be >= 2");
  if (channels < 2 * n_classes) throw ConfigError("synth.channels must be >= 2 * n_classes");
  if (steps <= max_lag + 2 * jitter_steps)
    throw ConfigError("synth.steps must exceed max_lag + 2 * jitter_steps");
  if (max_lag == 0) throw ConfigError("synth.max_lag must be positive");
  if (!(burst_prob >= 0.0 && burst_prob <= 1.0)) throw ConfigError("synth.burst_prob must lie in [0, 1]");
  if (!(burst_participation >= 0.0 && burst_participation <= 1.0))
    throw ConfigError("synth.burst_participation must lie in [0, 1]");
  if (n_train == 0) throw ConfigError("synth.n_train must be positive");
  if (!(dt_ms > 0.0)) throw ConfigError("synth.dt_ms must be positive");
}

namespace {

EventStream synth_sample(const SynthConfig& cfg, const std::vector<std::vector<long>>& lags,
                         std::uint64_t id, int label, Rng& rng) {
  const auto jitter = static_cast<long>(cfg.jitter_steps);
  const auto last_anchor = static_cast<long>(cfg.steps) - 1 - static_cast<long>(cfg.max_lag) - jitter;
  const long anchor = rng.uniform_int(jitter, last_anchor);
  const auto dt_us = std::llround(cfg.dt_ms * 1000.0);

  std::vector<std::pair<long, std::size_t>> hits;
  const auto& sig = lags[static_cast<std::size_t>(label)];
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    const long lag = sig[c] >= 0 ? sig[c] : rng.uniform_int(0, static_cast<long>(cfg.max_lag));
    const long t = anchor + lag + rng.uniform_int(-jitter, jitter);
    hits.emplace_back(t, c);
  }
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    if (!rng.bernoulli(cfg.burst_prob)) continue;
    for (std::size_t c = 0; c < cfg.channels; ++c)
      if (rng.bernoulli(cfg.burst_participation)) hits.emplace_back(static_cast<long>(t), c);
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());

  EventStream s;
  s.id = id;
  s.label = label;
  s.duration_ms = static_cast<double>(cfg.steps) * cfg.dt_ms;
  for (const auto& [t, c] : hits) s.events.push_back({t * dt_us, c});
  return s;
}

}  // namespace

SynthTask synth_coincidence_task(const SynthConfig& cfg) {
  cfg.validate();
  SynthTask task;
  const auto group = cfg.channels / cfg.n_classes;

  Rng lag_rng(derive_seed(cfg.seed, "synth.lags"));
  task.lags.assign(cfg.n_classes, std::vector<long>(cfg.channels, -1));
  for (std::size_t k = 0; k < cfg.n_classes; ++k) {
    // Evenly spaced lags in a class-specific random order.
    std::vector<long> spread(group);
    for (std::size_t i = 0; i < group; ++i)
      spread[i] = std::lround(static_cast<double>(i * cfg.max_lag) / static_cast<double>(group - 1));
    lag_rng.shuffle(spread.begin(), spread.end());
    for (std::size_t i = 0; i < group; ++i) task.lags[k][k * group + i] = spread[i];
  }
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    std::size_t owners = 0;
    for (std::size_t k = 0; k < cfg.n_classes; ++k) owners += task.lags[k][c] >= 0;
    if (owners > 1) throw ContractError("synth: signature groups overlap");
  }

  auto make_split = [&](std::size_t n, std::uint64_t first_id, std::string_view stream) {
    EventFile f;
    f.channels = cfg.channels;
    f.classes = cfg.n_classes;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(cfg.seed, stream, i));
      const auto label = static_cast<int>(i % cfg.n_classes);
      f.streams.push_back(synth_sample(cfg, task.lags, first_id + i, label, rng));
    }
    return f;
  };
  task.train = make_split(cfg.n_train, 0, "synth.train");
  task.eval = make_split(cfg.n_eval, cfg.n_train, "synth.eval");
  return task;
}

}  // namespace cadad
