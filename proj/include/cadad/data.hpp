#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cadad/tensor.hpp"

namespace cadad {

struct Event {
  std::int64_t time_us = 0;  // microseconds; files carry ms with <= 3 decimals
  std::size_t channel = 0;

  double time_ms() const { return static_cast<double>(time_us) / 1000.0; }
  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  std::uint64_t id = 0;
  int label = 0;
  double duration_ms = 0.0;
  std::vector<Event> events;  // sorted by time

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

struct EventFile {
  std::size_t channels = 0;
  std::size_t classes = 0;
  std::vector<EventStream> streams;
};

struct BinningConfig {
  double dt_ms = 10.0;
  std::size_t steps = 100;  // T
  std::size_t channels = 0; // C
  // true: a bin holds 1 if any event landed in it; false: the event count.
  bool clamp_binary = true;

  void validate() const;
};

// frame[t][c] covers events with time in [t*dt, (t+1)*dt). Events at or past
// steps*dt are dropped.
RealMatrix bin_events(const EventStream& stream, const BinningConfig& cfg);

// Warnings (e.g. auto-sorted streams) are sent to `warn` when provided.
using WarningSink = std::function<void(const std::string&)>;

EventFile parse_event_file(const std::string& text, const WarningSink& warn = {});
EventFile load_event_file(const std::filesystem::path& path, const WarningSink& warn = {});
std::string format_event_file(const EventFile& file);
void save_event_file(const EventFile& file, const std::filesystem::path& path);

// Binned, labelled samples ready for the network.
struct Dataset {
  SpikeTensor samples;
  std::vector<int> labels;
  std::vector<std::uint64_t> ids;
  std::size_t n_classes = 0;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

Dataset bin_dataset(const EventFile& file, const BinningConfig& cfg);

struct SynthConfig {
  std::size_t n_classes = 4;
  std::size_t channels = 32;
  std::size_t steps = 64;
  std::size_t max_lag = 24;       // signature lags span [0, max_lag] steps
  std::size_t jitter_steps = 2;   // uniform in [-jitter, +jitter]
  double burst_prob = 0.2;        // per-step probability of a background burst
  double burst_participation = 0.5;  // fraction of channels firing in a burst
  std::size_t n_train = 512;
  std::size_t n_eval = 256;
  double dt_ms = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthTask {
  EventFile train;
  EventFile eval;
  // lags[k][c]: signature lag of channel c for class k, or -1 when channel c
  // is not in class k's signature group.
  std::vector<std::vector<long>> lags;
};

// Temporal coincidence task. Channels are split into n_classes disjoint
// groups; class k's group fires once per channel at anchor + lag_k(c) +
// jitter, while every other channel fires once at a random time in the same
// window, so only spike timing identifies the class. Background bursts make
// a random fraction of all channels fire on the same step.
SynthTask synth_coincidence_task(const SynthConfig& cfg);

}  // namespace cadad
