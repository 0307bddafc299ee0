#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "graphsim/config.hpp"
#include "graphsim/evaluation.hpp"
#include "graphsim/ingest.hpp"
#include "graphsim/model.hpp"

namespace graphsim {

// Scenes are held by value; windows keep pointers into this vector, so it
// must not be resized once windows exist.
struct Dataset {
  std::vector<LoadedScene> scenes;
};

// Reads every <name>.json with a sibling <name>.map.json, sorted by name.
// Run manifests are skipped.
Dataset load_dataset_dir(const std::filesystem::path& dir);
void write_dataset_dir(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const RunConfig& config, const std::filesystem::path& workdir);

struct LabeledWindows {
  std::vector<ObservationWindow> windows;
  std::vector<LabeledPedestrian> pedestrians;  // only those with at least one window
};

LabeledWindows collect_windows(const Dataset& data, const WindowSpec& spec);

// Pedestrian-level split of the windows.
struct PreparedWindows {
  Split split;
  std::vector<ObservationWindow> train;
  std::vector<ObservationWindow> test;
  NormalizationManifest manifest;  // fitted on the training windows
};

PreparedWindows prepare_windows(const Dataset& data, const RunConfig& config);

// Builds samples in window order; graph construction runs in parallel.
std::vector<Sample> build_samples(const std::vector<ObservationWindow>& windows,
                                  const NormalizationManifest& manifest, const RunConfig& config);

struct Evaluation {
  std::vector<double> scores;
  std::vector<int> labels;
  MetricsReport metrics;
};

Evaluation evaluate(const GraphSimModel& model, const NormalizationManifest& manifest,
                    const std::vector<Sample>& samples, double threshold);

struct ExperimentResult {
  TrainResult training;
  Evaluation evaluation;
  std::uint64_t config_hash = 0;
};

ExperimentResult run_experiment(const Dataset& data, const RunConfig& config);

std::vector<AblationRow> run_ablation(int table, const Dataset& data, const RunConfig& base);

}  // namespace graphsim
