#include "graphsim/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <set>

#include "graphsim/error.hpp"
#include "graphsim/synthetic.hpp"

namespace graphsim {

namespace fs = std::filesystem;

Dataset load_dataset_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("data directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() != ".json") continue;
    if (p.stem().extension() == ".map" || p.stem().extension() == ".manifest") continue;
    if (p.filename() == "run_manifest.json") continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no scene files in " + dir.string());
  Dataset data;
  for (const auto& f : files) {
    fs::path map = f;
    map.replace_extension(".map.json");
    if (!fs::exists(map)) throw DataError("scene " + f.string() + " has no map file " + map.string());
    data.scenes.push_back(load_scene(f, map));
  }
  return data;
}

void write_dataset_dir(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  for (const auto& s : data.scenes) {
    write_annotation_file(dir / (s.scene.name + ".json"), annotations_from_scene(s.scene, s.behaviours));
    write_map_file(dir / (s.scene.name + ".map.json"), s.scene.lanes);
  }
}

Dataset load_dataset(const RunConfig& config, const fs::path& workdir) {
  Dataset data;
  if (config.synthetic == "separable") {
    data.scenes = separable_dataset(config.synthetic_pedestrians, config.seed);
  } else if (config.synthetic == "directional") {
    data.scenes = directional_group_dataset(config.synthetic_pedestrians, config.seed);
  } else {
    if (config.data_dir.empty()) throw ConfigError("set data.dir or data.synthetic");
    data = load_dataset_dir(workdir / config.data_dir);
  }
  return data;
}

LabeledWindows collect_windows(const Dataset& data, const WindowSpec& spec) {
  LabeledWindows out;
  std::set<std::string> keys;
  for (const auto& ls : data.scenes) {
    for (const auto& rec : ls.behaviours) {
      auto w = extract_windows(ls.scene, rec, spec);
      if (w.empty()) continue;
      const std::string key = ls.scene.name + ":" + rec.pedestrian_id;
      if (!keys.insert(key).second) throw DataError("pedestrian '" + key + "' listed twice");
      out.pedestrians.push_back({key, rec.will_cross ? 1 : 0});
      out.windows.insert(out.windows.end(), w.begin(), w.end());
    }
  }
  return out;
}

PreparedWindows prepare_windows(const Dataset& data, const RunConfig& config) {
  LabeledWindows all = collect_windows(data, config.window);
  PreparedWindows out;
  out.split = stratified_split(all.pedestrians, config.split_ratio, config.seed);
  const std::set<std::string> train_keys(out.split.train.begin(), out.split.train.end());
  for (const auto& w : all.windows) {
    const bool train = train_keys.count(w.scene->name + ":" + w.target_id) > 0;
    (train ? out.train : out.test).push_back(w);
  }
  out.manifest = fit_manifest(out.train, config.graph.clustering.speed_definition, config.d_thresh);
  return out;
}

std::vector<Sample> build_samples(const std::vector<ObservationWindow>& windows,
                                  const NormalizationManifest& manifest, const RunConfig& config) {
  std::vector<Sample> out(windows.size());
  std::exception_ptr failure;
  const long n = static_cast<long>(windows.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < n; ++i) {
    try {
      const auto& w = windows[i];
      out[i] = make_sample(*w.scene, w, manifest, config.graph, config.model.recenter_dynamics);
    } catch (...) {
#pragma omp critical(graphsim_build_samples)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Evaluation evaluate(const GraphSimModel& model, const NormalizationManifest& manifest,
                    const std::vector<Sample>& samples, double threshold) {
  Evaluation e;
  for (const auto& s : samples) {
    e.scores.push_back(predict(model, manifest, s).probability);
    e.labels.push_back(s.label);
  }
  e.metrics = compute_metrics(e.scores, e.labels, threshold);
  return e;
}

ExperimentResult run_experiment(const Dataset& data, const RunConfig& config) {
  const PreparedWindows prepared = prepare_windows(data, config);
  if (prepared.test.empty()) throw DataError("test split has no windows");
  const auto train_samples = build_samples(prepared.train, prepared.manifest, config);
  const auto test_samples = build_samples(prepared.test, prepared.manifest, config);
  ExperimentResult r;
  r.config_hash = config.hash();
  r.training = train(train_samples, config.model, config.train, prepared.manifest, r.config_hash,
                     config.canonical());
  const GraphSimModel model = model_from_checkpoint(r.training.checkpoint);
  r.evaluation = evaluate(model, prepared.manifest, test_samples, config.threshold);
  return r;
}

std::vector<AblationRow> run_ablation(int table, const Dataset& data, const RunConfig& base) {
  std::vector<AblationRow> rows;
  for (const auto& spec : table_variants(table)) {
    RunConfig cfg = base;
    apply_variant(spec, cfg.graph, cfg.model);
    cfg.finalize();
    const ExperimentResult r = run_experiment(data, cfg);
    rows.push_back({spec, r.config_hash, r.evaluation.metrics});
  }
  return rows;
}

}  // namespace graphsim
