#include "cadad/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "cadad/checkpoint.hpp"
#include "cadad/config.hpp"
#include "cadad/csv.hpp"
#include "cadad/errors.hpp"
#include "cadad/experiment.hpp"
#include "cadad/gradcheck.hpp"
#include "cadad/rng.hpp"

namespace cadad {

namespace fs = std::filesystem;

int guarded(const CommandIo& io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    io.err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ParseError& e) {
    io.err << "input error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    io.err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    io.err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::out_of_range& e) {
    io.err << "argument error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitContract;
  }
}

namespace {

RunConfig run_config(const fs::path& config_path, const Overrides& overrides) {
  if (config_path.empty()) return resolve_config({}, overrides);
  return load_config(config_path, overrides);
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

fs::path out_dir_for(const ArtifactOptions& a) {
  if (const char* env = std::getenv("CADAD_OUT_DIR"); env && *env) return prepare_dir(env);
  return prepare_dir(a.out_dir);
}

fs::path artifact(const fs::path& dir, const std::string& run_id, const std::string& suffix) {
  return dir / (run_id + "_" + suffix);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

class AppendFile {
public:
  explicit AppendFile(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write " + path.string());
  }
  void write(const std::string& text) {
    out_ << text;
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
  }

private:
  fs::path path_;
  std::ofstream out_;
};

WarningSink warn_to(const CommandIo& io) {
  return [&io](const std::string& msg) { io.err << "warning: " << msg << '\n'; };
}

Dataset load_for_checkpoint(const Checkpoint& ckpt, const fs::path& data_path,
                            const CommandIo& io) {
  const auto file = load_event_file(data_path, warn_to(io));
  if (file.channels != ckpt.net.spec.n_inputs())
    throw ConfigError("data file has " + std::to_string(file.channels) +
                      " channels, network expects " + std::to_string(ckpt.net.spec.n_inputs()));
  if (file.classes != ckpt.net.spec.n_classes)
    throw ConfigError("data file has " + std::to_string(file.classes) +
                      " classes, network expects " + std::to_string(ckpt.net.spec.n_classes));
  BinningConfig bc;
  bc.dt_ms = ckpt.dt_ms;
  bc.steps = ckpt.steps;
  bc.channels = file.channels;
  auto data = bin_dataset(file, bc);
  if (data.empty()) throw ConfigError("data file " + data_path.string() + " holds no samples");
  return data;
}

void print_accuracy(std::ostream& os, std::string_view label, double acc) {
  os << label << format_number(acc) << '\n';
}

}  // namespace

int cmd_train(const fs::path& config_path, const Overrides& overrides, const CommandIo& io) {
  return guarded(io, [&] {
    const auto cfg = run_config(config_path, overrides);
    const auto dir = prepare_dir(effective_out_dir(cfg));
    write_text(artifact(dir, cfg.run_id, "manifest.txt"), cfg.manifest());
    const auto data = build_datasets(cfg, warn_to(io));

    const auto ckpt_path = artifact(dir, cfg.run_id, "best.ckpt.json");
    AppendFile log(artifact(dir, cfg.run_id, "train_log.csv"));
    const auto hidden = cfg.hidden.size();
    log.write(train_log_header(hidden));

    TrainHooks hooks;
    hooks.on_log = [&](const TrainLogRow& row) {
      log.write(train_log_line(row, hidden));
      io.out << "epoch " << row.epoch << ' ' << row.split << " loss " << format_number(row.loss)
             << " acc " << format_number(row.accuracy) << '\n';
    };
    hooks.on_best = [&](const Network& net, int epoch) {
      save_checkpoint({net, epoch, cfg.seed, cfg.binning.dt_ms, cfg.binning.steps}, ckpt_path);
    };
    const auto run = run_single(cfg, data, cfg.delay.mode, cfg.seed, hooks);

    write_text(artifact(dir, cfg.run_id, "all_dynamics.csv"), dynamics_csv(run.dynamics));
    io.out << "best epoch " << run.result.best_epoch << '\n';
    print_accuracy(io.out, "eval accuracy (integer delays) ", run.eval_accuracy);
    print_accuracy(io.out, "eval accuracy (interpolated delays) ", run.eval_accuracy_continuous);
    io.out << "artifacts in " << dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data_path, bool continuous_delays,
             const ArtifactOptions& artifacts, const CommandIo& io) {
  return guarded(io, [&] {
    const auto ckpt = load_checkpoint(checkpoint);
    const auto data = load_for_checkpoint(ckpt, data_path, io);
    ForwardOptions fo;
    fo.epoch = ckpt.epoch;
    fo.discretize_delays = !continuous_delays;
    const auto ev = evaluate(ckpt.net, data, fo);

    const auto dir = out_dir_for(artifacts);
    CsvWriter acc;
    acc.field("samples").field("accuracy").field("loss").field("delays").end_row();
    acc.field(data.size()).field(ev.accuracy).field(ev.loss)
        .field(continuous_delays ? "interpolated" : "integer").end_row();
    write_text(artifact(dir, artifacts.run_id, "eval_accuracy.csv"), acc.str());

    CsvWriter conf;
    conf.field("true_class");
    for (std::size_t k = 0; k < ev.confusion.size(); ++k) conf.field("pred_" + std::to_string(k));
    conf.end_row();
    for (std::size_t k = 0; k < ev.confusion.size(); ++k) {
      conf.field(k);
      for (auto c : ev.confusion[k]) conf.field(c);
      conf.end_row();
    }
    write_text(artifact(dir, artifacts.run_id, "eval_confusion.csv"), conf.str());

    print_accuracy(io.out, "accuracy ", ev.accuracy);
    io.out << "confusion (rows true, columns predicted)\n";
    for (const auto& row : ev.confusion) {
      for (std::size_t j = 0; j < row.size(); ++j) io.out << (j ? " " : "") << row[j];
      io.out << '\n';
    }
    return kExitOk;
  });
}

int cmd_ablate(const fs::path& config_path, const Overrides& overrides, const CommandIo& io) {
  return guarded(io, [&] {
    const auto cfg = run_config(config_path, overrides);
    const auto dir = prepare_dir(effective_out_dir(cfg));
    write_text(artifact(dir, cfg.run_id, "manifest.txt"), cfg.manifest());
    const auto data = build_datasets(cfg, warn_to(io));

    std::vector<RunSummary> runs;
    for (auto seed : cfg.ablate_seeds) {
      for (auto mode : {DelayMode::none, DelayMode::fixed, DelayMode::dynamic}) {
        runs.push_back(run_single(cfg, data, mode, seed));
        const auto& r = runs.back();
        io.out << to_string(mode) << " seed " << seed << " accuracy "
               << format_number(r.eval_accuracy) << " (" << format_number(r.seconds) << " s)\n";
      }
    }
    const auto rows = summarize_ablation(runs);
    write_text(artifact(dir, cfg.run_id, "ablation.csv"),
               ablation_table_csv(rows, cfg.ablate_seeds.size()));
    write_text(artifact(dir, cfg.run_id, "ablation_runs.csv"), ablation_runs_csv(runs));

    std::vector<DynamicsReport> fixed;
    std::vector<DynamicsReport> dynamic;
    for (const auto& r : runs) {
      if (r.mode == DelayMode::fixed) fixed.push_back(r.dynamics);
      if (r.mode == DelayMode::dynamic) dynamic.push_back(r.dynamics);
    }
    write_text(artifact(dir, cfg.run_id, "all_dynamics_comparison.csv"),
               dynamics_comparison_csv(sum_reports(fixed), sum_reports(dynamic)));

    for (const auto& row : rows)
      io.out << to_string(row.mode) << ": " << format_number(row.mean) << " +/- "
             << format_number(row.stddev) << '\n';
    return kExitOk;
  });
}

int cmd_gradcheck(const fs::path& config_path, const Overrides& overrides, const CommandIo& io) {
  return guarded(io, [&] {
    const auto cfg = run_config(config_path, overrides);
    const auto dir = prepare_dir(effective_out_dir(cfg));
    const auto results = run_gradcheck_suites(derive_seed(cfg.seed, "gradcheck"), cfg.neuron,
                                              cfg.delay);
    CsvWriter w;
    w.field("suite").field("checked").field("max_rel_error").field("tolerance").field("pass").end_row();
    bool all = true;
    for (const auto& r : results) {
      w.field(r.name).field(r.checked).field(r.max_rel_error).field(r.tolerance)
          .field(r.pass ? "true" : "false").end_row();
      io.out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.checked
             << " gradients, max rel. error " << format_number(r.max_rel_error) << " (tol "
             << format_number(r.tolerance) << ")\n";
      all = all && r.pass;
    }
    write_text(artifact(dir, cfg.run_id, "gradcheck.csv"), w.str());
    return all ? kExitOk : kExitNumeric;
  });
}

int cmd_diagnose(const fs::path& checkpoint, const fs::path& data_path,
                 const DiagnoseOptions& opts, const CommandIo& io) {
  return guarded(io, [&] {
    if (opts.top_k == 0) throw ConfigError("top-k must be at least 1");
    const auto ckpt = load_checkpoint(checkpoint);
    const auto data = load_for_checkpoint(ckpt, data_path, io);
    if (opts.sample >= data.size())
      throw ConfigError("sample index " + std::to_string(opts.sample) + " out of range (" +
                        std::to_string(data.size()) + " samples)");
    ForwardOptions fo;
    fo.epoch = ckpt.epoch;
    fo.discretize_delays = !opts.continuous_delays;

    const auto dir = out_dir_for(opts.artifacts);
    const auto& id = opts.artifacts.run_id;
    const auto report = dynamics_report(ckpt.net, data, fo);
    write_text(artifact(dir, id, "all_dynamics.csv"), dynamics_csv(report));

    const auto& sample = data.samples[opts.sample];
    for (std::size_t l = 0; l < ckpt.net.spec.hidden_layers(); ++l)
      write_text(artifact(dir, id, "layer" + std::to_string(l) + "_membrane.csv"),
                 export_membrane_traces(ckpt.net, sample, l, opts.top_k, fo));
    const auto congestion = export_congestion_timeseries(ckpt.net, sample, fo);
    if (congestion.empty()) io.err << "warning: network has no dynamic-delay layers\n";
    for (const auto& [layer, csv] : congestion)
      write_text(artifact(dir, id, "layer" + std::to_string(layer) + "_congestion.csv"), csv);

    io.out << "summed u " << format_number(report.total.u) << ", overflow per spike "
           << format_number(report.total.overflow_per_spike) << '\n';
    return kExitOk;
  });
}

int cmd_synth_data(const fs::path& config_path, const Overrides& overrides, const CommandIo& io) {
  return guarded(io, [&] {
    const auto cfg = run_config(config_path, overrides);
    const auto dir = prepare_dir(effective_out_dir(cfg));
    write_text(artifact(dir, cfg.run_id, "manifest.txt"), cfg.manifest());
    const auto task = synth_coincidence_task(cfg.synth);
    const auto train_path = artifact(dir, cfg.run_id, "train.events");
    const auto eval_path = artifact(dir, cfg.run_id, "eval.events");
    save_event_file(task.train, train_path);
    save_event_file(task.eval, eval_path);
    io.out << "wrote " << train_path.string() << " (" << task.train.streams.size()
           << " samples) and " << eval_path.string() << " (" << task.eval.streams.size()
           << " samples)\n";
    return kExitOk;
  });
}

}  // namespace cadad
