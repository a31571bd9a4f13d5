#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cadad/data.hpp"
#include "cadad/delay_engine.hpp"
#include "cadad/network.hpp"
#include "cadad/spike_core.hpp"
#include "cadad/trainer.hpp"

namespace cadad {

enum class DataSource { synth, files };

// Fully resolved run configuration. Built from flat `section.key = value`
// text; every key is checked against a fixed schema.
struct RunConfig {
  std::uint64_t seed = 0;  // master seed, expanded per component

  std::vector<std::size_t> hidden{64, 64};
  Readout readout = Readout::mean_membrane;
  double dropout = 0.0;
  double init_gain = 1.0;

  NeuronConfig neuron;
  DelayConfig delay;
  TrainConfig train;

  DataSource source = DataSource::synth;
  std::filesystem::path train_path;
  std::filesystem::path eval_path;
  BinningConfig binning;
  SynthConfig synth;

  std::filesystem::path out_dir = "out";
  std::string run_id = "run";
  std::vector<std::uint64_t> ablate_seeds{0, 1, 2, 3, 4};

  // Resolved key/value pairs (defaults included) and the --set overrides in
  // the order given, for the run manifest.
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, std::string>> overrides;

  std::string manifest() const;
};

// All schema keys with their default values.
const std::map<std::string, std::string>& config_defaults();

// Parses `section.key = value` lines ('#' starts a comment). Throws
// ConfigError naming the offending key or line.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Splits "key=value"; throws ConfigError when malformed.
std::pair<std::string, std::string> parse_override(const std::string& assignment);

// Merges defaults, file values and overrides (in that order) and validates.
RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides = {});

// CADAD_OUT_DIR, when set, wins over output.dir.
std::filesystem::path effective_out_dir(const RunConfig& cfg);

}  // namespace cadad
