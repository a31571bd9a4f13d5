#include "cadad/config.hpp"

#include "cadad/errors.hpp"
#include "cadad/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace cadad {

const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"run.seed", "0"},

      {"network.hidden", "64,64"},
      {"network.readout", "mean_membrane"},
      {"network.dropout", "0.1"},
      {"network.init_gain", "1.0"},
      {"network.detach_reset", "false"},

      {"neuron.tau_ms", ""},
      {"neuron.leak", "0.5"},
      {"neuron.v_threshold", "1.0"},
      {"neuron.v_reset", "0.0"},
      {"neuron.surrogate_slope", "5.0"},

      {"delay.mode", "dynamic"},
      {"delay.d_max", "25"},
      {"delay.gamma", "1.0"},
      {"delay.k_smooth", "20"},
      {"delay.s_max", "0.5"},
      {"delay.s_min", "0.1"},
      {"delay.e_decay", "30"},
      {"delay.nonlinearity", "tanh"},
      {"delay.grad_through_congestion", "false"},

      {"train.epochs", "30"},
      {"train.batch_size", "32"},
      {"train.lr_w", "1e-2"},
      {"train.lr_delay", "1e-1"},
      {"train.weight_decay", "1e-5"},
      {"train.eval_every", "1"},
      {"train.grad_clip", "10.0"},
      {"train.onecycle_warmup", "0.3"},
      {"train.onecycle_start_div", "25"},
      {"train.onecycle_final_div", "1e4"},
      {"train.discretize_eval", "true"},
      {"train.split", "eval"},

      {"data.source", "synth"},
      {"data.train_path", ""},
      {"data.eval_path", ""},
      {"data.dt_ms", "10"},
      {"data.steps", "64"},
      {"data.clamp_binary", "true"},

      {"synth.n_classes", "4"},
      {"synth.channels", "32"},
      {"synth.max_lag", "24"},
      {"synth.jitter", "2"},
      {"synth.burst_prob", "0.2"},
      {"synth.burst_participation", "0.15"},
      {"synth.n_train", "2048"},
      {"synth.n_eval", "512"},
      {"synth.seed", ""},

      {"output.dir", "out"},
      {"output.run_id", "run"},

      {"ablate.seeds", "0,1,2,3,4"},
  };
  return defaults;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void check_known(const std::string& key) {
  if (!config_defaults().contains(key)) throw ConfigError("unknown config key '" + key + "'");
}

class Values {
public:
  explicit Values(const std::map<std::string, std::string>& v) : v_(v) {}

  const std::string& str(const std::string& key) const { return v_.at(key); }

  double real(const std::string& key) const {
    const auto& s = str(key);
    double out = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(out))
      throw ConfigError(key + ": expected a number, got '" + s + "'");
    return out;
  }

  long integer(const std::string& key) const {
    const auto& s = str(key);
    long out = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
      throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return out;
  }

  std::size_t count(const std::string& key) const {
    const long v = integer(key);
    if (v < 0) throw ConfigError(key + ": must be nonnegative");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed(const std::string& key) const {
    const auto& s = str(key);
    std::uint64_t out = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
      throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
    return out;
  }

  bool boolean(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + s + "'");
  }

  template <class T, class F>
  std::vector<T> list(const std::string& key, F&& parse_one) const {
    std::vector<T> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) throw ConfigError(key + ": empty list element");
      out.push_back(parse_one(item));
    }
    return out;
  }

  template <class F>
  auto with_key(const std::string& key, F&& f) const {
    try {
      return f(str(key));
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

private:
  const std::map<std::string, std::string>& v_;
};

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("expected an unsigned integer, got '" + s + "'");
  return v;
}

int as_int(long v, const char* key) {
  if (v < -1000000000L || v > 1000000000L) throw ConfigError(std::string(key) + ": out of range");
  return static_cast<int>(v);
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'section.key = value'");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.find('.') == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' must have the form section.key");
    check_known(key);
    if (out.contains(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

std::pair<std::string, std::string> parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  auto key = trim(std::string_view(assignment).substr(0, eq));
  auto value = trim(std::string_view(assignment).substr(eq + 1));
  check_known(key);
  return {key, value};
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  cfg.values = config_defaults();
  std::set<std::string> explicit_keys;
  for (const auto& [k, v] : file_values) {
    check_known(k);
    cfg.values[k] = v;
    explicit_keys.insert(k);
  }
  for (const auto& [k, v] : overrides) {
    check_known(k);
    cfg.values[k] = v;
    explicit_keys.insert(k);
  }
  cfg.overrides = overrides;
  const Values val(cfg.values);

  cfg.seed = val.seed("run.seed");

  cfg.hidden = val.list<std::size_t>("network.hidden", parse_size);
  for (auto h : cfg.hidden)
    if (h == 0) throw ConfigError("network.hidden: layer widths must be positive");
  cfg.readout = val.with_key("network.readout", [](const std::string& s) { return parse_readout(s); });
  cfg.dropout = val.real("network.dropout");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    throw ConfigError("network.dropout: must lie in [0, 1)");
  cfg.init_gain = val.real("network.init_gain");
  if (!(cfg.init_gain > 0.0)) throw ConfigError("network.init_gain: must be positive");

  cfg.binning.dt_ms = val.real("data.dt_ms");
  cfg.binning.steps = val.count("data.steps");
  cfg.binning.clamp_binary = val.boolean("data.clamp_binary");

  auto& n = cfg.neuron;
  n.detach_reset = val.boolean("network.detach_reset");
  n.v_threshold = val.real("neuron.v_threshold");
  n.v_reset = val.real("neuron.v_reset");
  n.surrogate_slope = val.real("neuron.surrogate_slope");
  if (!val.str("neuron.tau_ms").empty()) {
    if (explicit_keys.contains("neuron.leak"))
      throw ConfigError("neuron.leak: conflicts with neuron.tau_ms; set only one");
    n.leak = NeuronConfig::leak_from_tau(val.real("neuron.tau_ms"), cfg.binning.dt_ms);
  } else {
    n.leak = val.real("neuron.leak");
  }
  try {
    n.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("neuron: ") + e.what());
  }

  auto& d = cfg.delay;
  d.mode = val.with_key("delay.mode", [](const std::string& s) { return parse_delay_mode(s); });
  d.d_max = val.real("delay.d_max");
  d.gamma = val.real("delay.gamma");
  d.k_smooth = as_int(val.integer("delay.k_smooth"), "delay.k_smooth");
  d.s_max = val.real("delay.s_max");
  d.s_min = val.real("delay.s_min");
  d.e_decay = as_int(val.integer("delay.e_decay"), "delay.e_decay");
  d.nonlinearity = val.with_key("delay.nonlinearity",
                                [](const std::string& s) { return parse_nonlinearity(s); });
  d.grad_through_congestion = val.boolean("delay.grad_through_congestion");
  d.validate();

  auto& t = cfg.train;
  t.epochs = as_int(val.integer("train.epochs"), "train.epochs");
  t.batch_size = val.count("train.batch_size");
  t.lr_w = val.real("train.lr_w");
  t.lr_delay = val.real("train.lr_delay");
  t.weight_decay = val.real("train.weight_decay");
  t.seed = derive_seed(cfg.seed, "train");
  t.eval_every = as_int(val.integer("train.eval_every"), "train.eval_every");
  t.grad_clip = val.real("train.grad_clip");
  t.onecycle.warmup_fraction = val.real("train.onecycle_warmup");
  t.onecycle.start_div = val.real("train.onecycle_start_div");
  t.onecycle.final_div = val.real("train.onecycle_final_div");
  t.discretize_eval = val.boolean("train.discretize_eval");
  {
    const auto& s = val.str("train.split");
    if (s == "eval")
      t.select_on = SelectSplit::eval;
    else if (s == "train")
      t.select_on = SelectSplit::train;
    else
      throw ConfigError("train.split: expected eval or train, got '" + s + "'");
  }
  t.validate();

  {
    const auto& s = val.str("data.source");
    if (s == "synth")
      cfg.source = DataSource::synth;
    else if (s == "files")
      cfg.source = DataSource::files;
    else
      throw ConfigError("data.source: expected synth or files, got '" + s + "'");
  }
  cfg.train_path = val.str("data.train_path");
  cfg.eval_path = val.str("data.eval_path");
  if (cfg.source == DataSource::files && cfg.train_path.empty())
    throw ConfigError("data.train_path: required when data.source = files");

  auto& s = cfg.synth;
  s.n_classes = val.count("synth.n_classes");
  s.channels = val.count("synth.channels");
  s.steps = cfg.binning.steps;
  s.max_lag = val.count("synth.max_lag");
  s.jitter_steps = val.count("synth.jitter");
  s.burst_prob = val.real("synth.burst_prob");
  s.burst_participation = val.real("synth.burst_participation");
  s.n_train = val.count("synth.n_train");
  s.n_eval = val.count("synth.n_eval");
  s.dt_ms = cfg.binning.dt_ms;
  s.seed = val.str("synth.seed").empty() ? derive_seed(cfg.seed, "synth") : val.seed("synth.seed");
  if (cfg.source == DataSource::synth) s.validate();

  cfg.out_dir = val.str("output.dir");
  cfg.run_id = val.str("output.run_id");
  if (cfg.run_id.empty() || cfg.run_id.find('/') != std::string::npos)
    throw ConfigError("output.run_id: must be a non-empty file-name token");
  cfg.ablate_seeds = val.list<std::uint64_t>("ablate.seeds", [](const std::string& x) {
    return static_cast<std::uint64_t>(parse_size(x));
  });
  if (cfg.ablate_seeds.empty()) throw ConfigError("ablate.seeds: needs at least one seed");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return resolve_config(parse_config_text(ss.str()), overrides);
}

std::string RunConfig::manifest() const {
  std::string out = "# cadad run manifest\n";
  out += "# master_seed = " + std::to_string(seed) + "\n";
  for (const auto& [k, v] : overrides) out += "# override " + k + " = " + v + "\n";
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

std::filesystem::path effective_out_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("CADAD_OUT_DIR"); env && *env) return env;
  return cfg.out_dir;
}

}  // namespace cadad
