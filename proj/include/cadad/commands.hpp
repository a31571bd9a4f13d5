#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cadad {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

using Overrides = std::vector<std::pair<std::string, std::string>>;

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
};

// Runs `body`, mapping library exceptions to exit codes and printing the
// message to io.err.
int guarded(const CommandIo& io, const std::function<int()>& body);

// Empty config_path means defaults only.
int cmd_train(const std::filesystem::path& config_path, const Overrides& overrides,
              const CommandIo& io);

struct ArtifactOptions {
  std::filesystem::path out_dir = "out";  // CADAD_OUT_DIR wins
  std::string run_id = "run";
};

int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_path,
             bool continuous_delays, const ArtifactOptions& artifacts, const CommandIo& io);

int cmd_ablate(const std::filesystem::path& config_path, const Overrides& overrides,
               const CommandIo& io);

int cmd_gradcheck(const std::filesystem::path& config_path, const Overrides& overrides,
                  const CommandIo& io);

struct DiagnoseOptions {
  ArtifactOptions artifacts;
  std::size_t sample = 0;  // sample used for membrane and congestion traces
  std::size_t top_k = 3;
  bool continuous_delays = false;
};

int cmd_diagnose(const std::filesystem::path& checkpoint, const std::filesystem::path& data_path,
                 const DiagnoseOptions& opts, const CommandIo& io);

int cmd_synth_data(const std::filesystem::path& config_path, const Overrides& overrides,
                   const CommandIo& io);

}  // namespace cadad
