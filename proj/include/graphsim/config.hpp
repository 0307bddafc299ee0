#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "graphsim/graph_builder.hpp"
#include "graphsim/model.hpp"
#include "graphsim/scene.hpp"

namespace graphsim {

inline constexpr const char* kVersion = "0.1.0";

// Every tunable of a run. Serialized as a flat JSON object with dotted keys
// ("clustering.ped_eps"); missing keys keep their defaults, unknown keys are
// rejected.
struct RunConfig {
  std::uint64_t seed = 7;  // split, initialisation and shuffling
  std::string data_dir;    // scenes as <name>.json + <name>.map.json
  std::string synthetic;   // "", "separable" or "directional"
  int synthetic_pedestrians = 200;
  WindowSpec window;
  double split_ratio = 0.7;
  double threshold = 0.5;
  double d_thresh = 20.0;
  GraphOptions graph;
  ModelConfig model;
  TrainConfig train;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& flat);

  // Applies "key=value"; the value is read as JSON when it parses, as a
  // plain string otherwise.
  void set(const std::string& assignment);

  // Fills the seed into the model and trainer and validates everything.
  void finalize();

  std::string canonical() const;  // sorted, compact JSON
  std::uint64_t hash() const;
};

std::uint64_t fnv1a64(const std::string& bytes);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace graphsim
