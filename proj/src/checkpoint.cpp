#include "cadad/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cadad {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "cadad-checkpoint";

json matrix_json(const RealMatrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.flat().begin(), m.flat().end())}};
}

RealMatrix matrix_from(const json& j) {
  RealMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw ConfigError("checkpoint: matrix data size mismatch");
  std::copy(data.begin(), data.end(), m.flat().begin());
  return m;
}

std::string_view to_string(SpikeFunction f) {
  return f == SpikeFunction::relaxed ? "relaxed" : "heaviside";
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  const auto& net = ckpt.net;
  json layers = json::array();
  for (const auto& l : net.spec.layers)
    layers.push_back({{"n_in", l.n_in}, {"n_out", l.n_out},
                      {"delay_mode", std::string(to_string(l.delay_mode))},
                      {"dropout_rate", l.dropout_rate}});
  json weights = json::array();
  for (const auto& w : net.params.weights) weights.push_back(matrix_json(w));
  json delays = json::array();
  for (const auto& d : net.params.delays) delays.push_back(d.d_base);

  const auto& dc = net.delay;
  json doc = {
      {"format", kFormat},
      {"version", kCheckpointVersion},
      {"epoch", ckpt.epoch},
      {"seed", ckpt.seed},
      {"binning", {{"dt_ms", ckpt.dt_ms}, {"steps", ckpt.steps}}},
      {"spec",
       {{"layers", layers},
        {"readout", std::string(to_string(net.spec.readout))},
        {"n_classes", net.spec.n_classes}}},
      {"neuron",
       {{"leak", net.neuron.leak},
        {"v_threshold", net.neuron.v_threshold},
        {"v_reset", net.neuron.v_reset},
        {"surrogate_slope", net.neuron.surrogate_slope},
        {"spike_fn", std::string(to_string(net.neuron.spike_fn))},
        {"detach_reset", net.neuron.detach_reset}}},
      {"delay",
       {{"mode", std::string(to_string(dc.mode))},
        {"d_max", dc.d_max},
        {"gamma", dc.gamma},
        {"k_smooth", dc.k_smooth},
        {"s_max", dc.s_max},
        {"s_min", dc.s_min},
        {"e_decay", dc.e_decay},
        {"nonlinearity", std::string(to_string(dc.nonlinearity))},
        {"grad_through_congestion", dc.grad_through_congestion}}},
      {"params", {{"weights", weights}, {"d_base", delays}}},
  };
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat)
      throw ConfigError("checkpoint: not a cadad checkpoint");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ConfigError("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ck;
    ck.epoch = doc.at("epoch").get<int>();
    ck.seed = doc.at("seed").get<std::uint64_t>();
    ck.dt_ms = doc.at("binning").at("dt_ms").get<double>();
    ck.steps = doc.at("binning").at("steps").get<std::size_t>();

    auto& net = ck.net;
    const auto& sj = doc.at("spec");
    for (const auto& l : sj.at("layers"))
      net.spec.layers.push_back({l.at("n_in").get<std::size_t>(), l.at("n_out").get<std::size_t>(),
                                 parse_delay_mode(l.at("delay_mode").get<std::string>()),
                                 l.at("dropout_rate").get<double>()});
    net.spec.readout = parse_readout(sj.at("readout").get<std::string>());
    net.spec.n_classes = sj.at("n_classes").get<std::size_t>();
    net.spec.validate();

    const auto& nj = doc.at("neuron");
    net.neuron.leak = nj.at("leak").get<double>();
    net.neuron.v_threshold = nj.at("v_threshold").get<double>();
    net.neuron.v_reset = nj.at("v_reset").get<double>();
    net.neuron.surrogate_slope = nj.at("surrogate_slope").get<double>();
    net.neuron.spike_fn = nj.at("spike_fn").get<std::string>() == "relaxed"
                              ? SpikeFunction::relaxed
                              : SpikeFunction::heaviside;
    net.neuron.detach_reset = nj.at("detach_reset").get<bool>();
    net.neuron.validate();

    const auto& dj = doc.at("delay");
    auto& dc = net.delay;
    dc.mode = parse_delay_mode(dj.at("mode").get<std::string>());
    dc.d_max = dj.at("d_max").get<double>();
    dc.gamma = dj.at("gamma").get<double>();
    dc.k_smooth = dj.at("k_smooth").get<int>();
    dc.s_max = dj.at("s_max").get<double>();
    dc.s_min = dj.at("s_min").get<double>();
    dc.e_decay = dj.at("e_decay").get<int>();
    dc.nonlinearity = parse_nonlinearity(dj.at("nonlinearity").get<std::string>());
    dc.grad_through_congestion = dj.at("grad_through_congestion").get<bool>();
    dc.validate();

    const auto& pj = doc.at("params");
    for (const auto& w : pj.at("weights")) net.params.weights.push_back(matrix_from(w));
    for (const auto& d : pj.at("d_base"))
      net.params.delays.push_back({d.get<std::vector<double>>()});
    if (net.params.weights.size() != net.spec.layers.size() ||
        net.params.delays.size() != net.spec.layers.size())
      throw ConfigError("checkpoint: parameter count does not match layer count");
    for (std::size_t l = 0; l < net.spec.layers.size(); ++l) {
      const auto& spec = net.spec.layers[l];
      if (net.params.weights[l].rows() != spec.n_in || net.params.weights[l].cols() != spec.n_out ||
          net.params.delays[l].channels() != spec.n_in)
        throw ConfigError("checkpoint: layer " + std::to_string(l) + " parameter shape mismatch");
    }
    return ck;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(ckpt);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace cadad
