#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cadad/network.hpp"

namespace cadad {

inline constexpr int kCheckpointVersion = 1;

// Everything needed to resume evaluation: the network (spec, neuron and delay
// configuration, parameters), the epoch that drives the shift annealing, and
// the binning geometry the network was trained on.
struct Checkpoint {
  Network net;
  int epoch = 0;
  std::uint64_t seed = 0;
  double dt_ms = 10.0;
  std::size_t steps = 0;
};

// Self-describing JSON document with a {"format", "version"} header. Doubles
// are written in shortest round-trip form, so load(save(x)) is exact.
std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cadad
