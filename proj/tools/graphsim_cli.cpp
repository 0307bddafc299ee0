#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphsim/config.hpp"
#include "graphsim/error.hpp"
#include "graphsim/evaluation.hpp"
#include "graphsim/ingest.hpp"
#include "graphsim/pipeline.hpp"
#include "graphsim/synthetic.hpp"

namespace fs = std::filesystem;
using namespace graphsim;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

// Tracks everything a command creates so a failed run leaves nothing behind.
class Outputs {
 public:
  ~Outputs() {
    if (committed_) return;
    for (auto it = created_.rbegin(); it != created_.rend(); ++it) {
      std::error_code ec;
      fs::remove_all(*it, ec);
    }
  }
  fs::path dir(const fs::path& p) {
    if (!fs::exists(p)) {
      fs::path top = p;
      while (top.has_parent_path() && !top.parent_path().empty() && !fs::exists(top.parent_path())) {
        top = top.parent_path();
      }
      created_.push_back(top);
      fs::create_directories(p);
    }
    return p;
  }
  fs::path file(const fs::path& p) {
    if (p.has_parent_path()) dir(p.parent_path());
    if (!fs::exists(p)) created_.push_back(p);
    return p;
  }
  void write(const fs::path& p, const std::string& text) {
    std::ofstream out(file(p), std::ios::binary);
    out << text;
    if (!out) throw DataError("failed writing " + p.string());
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> created_;
  bool committed_ = false;
};

struct Common {
  std::string workdir = ".";
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(workdir) / path;
  }

  RunConfig run_config() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(resolve(config));
    for (const auto& s : sets) c.set(s);
    if (seed) c.set("seed=" + std::to_string(*seed));
    c.finalize();
    return c;
  }
};

std::string run_manifest(const std::string& command, std::uint64_t hash, std::uint64_t seed) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = buf;
  j["seed"] = seed;
  j["version"] = kVersion;
  return j.dump(2) + "\n";
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file (flat dotted keys)");
  sub->add_option("--set", c.sets, "Override a config key: key=value (repeatable)");
  sub->add_option("--seed", c.seed, "Seed for splitting, initialisation and shuffling");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian crossing-action prediction from spatiotemporal scene graphs"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--workdir", common.workdir, "Base directory for relative paths");

  std::string input, output, kind = "separable", projected, detections, checkpoint;
  double rate = 10.0, iou_threshold = 0.5;
  int pedestrians = 200, table = 3;
  std::size_t limit = 0;

  auto* densify_cmd = app.add_subcommand("densify", "Interpolate keyframe annotations to a higher rate");
  densify_cmd->add_option("--input", input, "Keyframe annotation file")->required();
  densify_cmd->add_option("--output", output, "Densified annotation file")->required();
  densify_cmd->add_option("--rate", rate, "Target frame rate in Hz");

  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics table");
  stats_cmd->add_option("--data", input, "Scene directory (defaults to data.dir)");
  stats_cmd->add_option("--output", output, "CSV output (stdout when omitted)");

  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic dataset");
  gen_cmd->add_option("--kind", kind, "separable | directional | scenario")
      ->check(CLI::IsMember({"separable", "directional", "scenario"}));
  gen_cmd->add_option("--pedestrians", pedestrians, "Number of pedestrians");
  gen_cmd->add_option("--output", output, "Output directory")->required();

  auto* graphs_cmd = app.add_subcommand("build-graphs", "Dump per-window V/A/B/D tensors as CSV");
  graphs_cmd->add_option("--output", output, "Output directory")->required();
  graphs_cmd->add_option("--limit", limit, "Dump at most this many windows (0 = all)");

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--output", output, "Run directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Score the test split with a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--output", output, "Metrics JSON")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score every variant of a table");
  ablate_cmd->add_option("--table", table, "2, 3 or 4")->check(CLI::IsMember({2, 3, 4}));
  ablate_cmd->add_option("--output", output, "Output directory")->required();

  auto* verify_cmd = app.add_subcommand("verify-interp", "Check interpolated boxes against detections");
  verify_cmd->add_option("--projected", projected, "Projected annotation boxes (JSON)")->required();
  verify_cmd->add_option("--detections", detections, "Detector boxes (JSON)")->required();
  verify_cmd->add_option("--threshold", iou_threshold, "IoU threshold");
  verify_cmd->add_option("--output", output, "Report JSON")->required();

  for (auto* sub : {densify_cmd, stats_cmd, gen_cmd, graphs_cmd, train_cmd, eval_cmd, ablate_cmd, verify_cmd}) {
    add_common(sub, common);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Outputs outputs;
  try {
    const RunConfig cfg = common.run_config();
    const fs::path out = output.empty() ? fs::path() : common.resolve(output);

    if (command == "densify") {
      const AnnotationFile raw = read_annotation_file(common.resolve(input));
      const AnnotationFile dense = densify_annotations(raw, rate);
      outputs.write(out, annotation_to_json(dense));
      outputs.write(out.string() + ".manifest.json", run_manifest(command, cfg.hash(), cfg.seed));
    } else if (command == "stats") {
      Dataset data;
      if (!input.empty()) data = load_dataset_dir(common.resolve(input));
      else data = load_dataset(cfg, common.workdir);
      const std::string csv = stats_to_csv(compute_stats(data.scenes));
      if (out.empty()) {
        std::cout << csv;
      } else {
        outputs.write(out, csv);
        outputs.write(out.string() + ".manifest.json", run_manifest(command, cfg.hash(), cfg.seed));
      }
    } else if (command == "gen-synthetic") {
      Dataset data;
      if (kind == "separable") {
        data.scenes = separable_dataset(pedestrians, cfg.seed);
      } else if (kind == "directional") {
        data.scenes = directional_group_dataset(pedestrians, cfg.seed);
      } else {
        ScenarioSpec spec;
        spec.seed = cfg.seed;
        spec.crossers = std::max(1, pedestrians / 3);
        spec.walkers = std::max(0, pedestrians / 3);
        spec.standers = std::max(0, pedestrians - spec.crossers - spec.walkers);
        spec.parked_vehicles = 2;
        spec.bicycles = 1;
        data.scenes.push_back(generate_scene(spec));
      }
      outputs.dir(out);
      for (const auto& ls : data.scenes) {
        outputs.file(out / (ls.scene.name + ".json"));
        outputs.file(out / (ls.scene.name + ".map.json"));
      }
      write_dataset_dir(out, data);
      outputs.write(out / "run_manifest.json", run_manifest(command, cfg.hash(), cfg.seed));
    } else if (command == "build-graphs") {
      const Dataset data = load_dataset(cfg, common.workdir);
      const PreparedWindows prepared = prepare_windows(data, cfg);
      std::vector<ObservationWindow> windows = prepared.train;
      windows.insert(windows.end(), prepared.test.begin(), prepared.test.end());
      if (limit > 0 && windows.size() > limit) windows.resize(limit);
      const auto samples = build_samples(windows, prepared.manifest, cfg);
      outputs.dir(out);
      for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        const fs::path dir = out / (w.scene->name + "_" + w.target_id + "_" + std::to_string(w.first_frame));
        dump_graph_csv(outputs.dir(dir), samples[i].graph);
      }
      outputs.write(out / "run_manifest.json", run_manifest(command, cfg.hash(), cfg.seed));
    } else if (command == "train") {
      const Dataset data = load_dataset(cfg, common.workdir);
      const PreparedWindows prepared = prepare_windows(data, cfg);
      const auto samples = build_samples(prepared.train, prepared.manifest, cfg);
      const TrainResult result =
          train(samples, cfg.model, cfg.train, prepared.manifest, cfg.hash(), cfg.canonical());
      outputs.dir(out);
      save_checkpoint(outputs.file(out / "checkpoint.bin"), result.checkpoint);
      outputs.write(out / "train_log.csv", train_log_csv(result.log));
      outputs.write(out / "config.json", cfg.to_json().dump(2) + "\n");
      outputs.write(out / "run_manifest.json", run_manifest(command, cfg.hash(), cfg.seed));
    } else if (command == "eval") {
      const Checkpoint ckpt = load_checkpoint(common.resolve(checkpoint));
      const auto stored = nlohmann::json::parse(ckpt.run_config, nullptr, false);
      if (stored.is_discarded()) throw DataError("checkpoint carries an unreadable run config");
      RunConfig run = RunConfig::from_json(stored);
      for (const auto& s : common.sets) run.set(s);
      const Dataset data = load_dataset(run, common.workdir);
      const PreparedWindows prepared = prepare_windows(data, run);
      const auto samples = build_samples(prepared.test, ckpt.manifest, run);
      const Evaluation e = evaluate(model_from_checkpoint(ckpt), ckpt.manifest, samples, run.threshold);
      outputs.write(out, metrics_json(e.metrics, e.scores, e.labels));
      outputs.write(out.string() + ".manifest.json", run_manifest(command, ckpt.config_hash, run.seed));
    } else if (command == "ablate") {
      const Dataset data = load_dataset(cfg, common.workdir);
      const auto rows = run_ablation(table, data, cfg);
      outputs.dir(out);
      outputs.write(out / ("table" + std::to_string(table) + ".csv"), ablation_csv(table, rows));
      outputs.write(out / "run_manifest.json", run_manifest(command, cfg.hash(), cfg.seed));
    } else if (command == "verify-interp") {
      const auto report = verify_interpolation(read_projected_file(common.resolve(projected)),
                                               read_detections_file(common.resolve(detections)),
                                               iou_threshold);
      outputs.write(out, report_to_json(report));
      outputs.write(out.string() + ".manifest.json", run_manifest(command, cfg.hash(), cfg.seed));
    }
    outputs.commit();
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
