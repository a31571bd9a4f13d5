// Command-line entry point: train, eval, ablate, gradcheck, diagnose,
// synth-data.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cadad/commands.hpp"
#include "cadad/config.hpp"
#include "cadad/errors.hpp"

namespace {

struct ConfigArgs {
  std::string config;
  std::vector<std::string> sets;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config, "Config file (section.key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", args.sets, "Override a config key: --set key=value (repeatable)");
}

void add_artifact_args(CLI::App* cmd, cadad::ArtifactOptions& a) {
  cmd->add_option("-o,--out-dir", a.out_dir, "Output directory (CADAD_OUT_DIR wins)");
  cmd->add_option("--run-id", a.run_id, "Prefix for output files");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking networks with congestion-aware dynamic axonal delays"};
  app.require_subcommand(1);

  ConfigArgs train_args, ablate_args, grad_args, synth_args;
  auto* train = app.add_subcommand("train", "Train one network and keep the best checkpoint");
  add_config_args(train, train_args);
  auto* ablate = app.add_subcommand("ablate", "Compare none/static/dynamic delays over seeds");
  add_config_args(ablate, ablate_args);
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  add_config_args(grad, grad_args);
  auto* synth = app.add_subcommand("synth-data", "Write the synthetic task as event files");
  add_config_args(synth, synth_args);

  std::string eval_ckpt, eval_data;
  bool continuous = false;
  cadad::ArtifactOptions eval_art;
  eval_art.run_id = "eval";
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on an event file");
  eval->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("data", eval_data, "Event file")->required();
  eval->add_flag("--continuous-delays", continuous, "Interpolate fractional delays");
  add_artifact_args(eval, eval_art);

  std::string diag_ckpt, diag_data;
  cadad::DiagnoseOptions diag_opts;
  diag_opts.artifacts.run_id = "diagnose";
  auto* diag = app.add_subcommand("diagnose", "Export congestion and overflow diagnostics");
  diag->add_option("checkpoint", diag_ckpt, "Checkpoint file")->required();
  diag->add_option("data", diag_data, "Event file")->required();
  diag->add_option("--sample", diag_opts.sample, "Sample index for the trace exports");
  diag->add_option("--top-k", diag_opts.top_k, "Neurons per layer in the membrane export");
  diag->add_flag("--continuous-delays", diag_opts.continuous_delays,
                 "Interpolate fractional delays");
  add_artifact_args(diag, diag_opts.artifacts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cadad::kExitConfig;
  }

  const cadad::CommandIo io{std::cout, std::cerr};
  auto overrides = [&](const ConfigArgs& a, cadad::Overrides& out) {
    return cadad::guarded(io, [&] {
      for (const auto& s : a.sets) out.push_back(cadad::parse_override(s));
      return 0;
    });
  };
  auto with_config = [&](const ConfigArgs& a, auto&& cmd) {
    cadad::Overrides ov;
    if (const int rc = overrides(a, ov); rc != 0) return rc;
    return cmd(a.config, ov, io);
  };

  if (*train) return with_config(train_args, cadad::cmd_train);
  if (*ablate) return with_config(ablate_args, cadad::cmd_ablate);
  if (*grad) return with_config(grad_args, cadad::cmd_gradcheck);
  if (*synth) return with_config(synth_args, cadad::cmd_synth_data);
  if (*eval) return cadad::cmd_eval(eval_ckpt, eval_data, continuous, eval_art, io);
  if (*diag) return cadad::cmd_diagnose(diag_ckpt, diag_data, diag_opts, io);
  return cadad::kExitConfig;
}
