#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graphsim/graph_builder.hpp"
#include "graphsim/nn.hpp"
#include "graphsim/scene.hpp"

namespace graphsim {

inline constexpr double kVelocityScale = 1000.0;

enum class DynamicsFields { None, Location, Velocity, Both };

const char* to_string(DynamicsFields f);
DynamicsFields parse_dynamics_fields(const std::string& s);

struct ModelConfig {
  std::size_t feature_dim = kFeatureSize;
  std::size_t spatial_hidden = 128;
  std::size_t graph_out = 512;  // embedding width of the target pedestrian node
  std::size_t graph_lstm = 256;
  std::size_t ped_lstm = 64;
  std::size_t ego_lstm = 64;
  std::size_t attention_dim = 64;
  AdjacencyNormalization adjacency = AdjacencyNormalization::None;
  bool use_ped_dynamics = true;
  bool use_ego_dynamics = true;
  DynamicsFields ped_fields = DynamicsFields::Both;
  DynamicsFields ego_fields = DynamicsFields::Both;
  bool recenter_dynamics = false;
  std::uint64_t seed = 7;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  double learning_rate = 2e-6;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  bool class_weighting = true;
  std::uint64_t seed = 7;

  void validate() const;
};

// Per-frame [x, y, 1000 vx, 1000 vy]. Velocity is zero on the first window frame.
Tensor encode_dynamics(const RoadUser& user, const ObservationWindow& window,
                       bool recenter = false);

struct Sample {
  GraphTensors graph;
  Tensor ped_dynamics;  // T x 4
  Tensor ego_dynamics;  // T x 4
  int label = 0;
  std::string pedestrian_key;  // scene-qualified id, used for splitting
};

Sample make_sample(const Scene& scene, const ObservationWindow& window,
                   const NormalizationManifest& manifest, const GraphOptions& options,
                   bool recenter_dynamics = false);

class GraphSimModel {
 public:
  explicit GraphSimModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  void zero_grad();

  struct Trace {
    bool valid = false;
    std::size_t T = 0;
    std::vector<Tensor> A;  // normalized per-frame adjacency
    std::vector<nn::GraphConvCache> conv1;
    std::vector<Tensor> Z1;  // pre-activation layer 1
    std::vector<nn::GraphConvCache> conv2;
    Tensor Z2;  // T x 1 x Q~ (node 0)
    Tensor Z3;  // after temporal conv, pre-activation
    Tensor P;   // T x Q~ target embeddings
    Tensor ped_in, ego_in;
    nn::Lstm::Trace graph_lstm, ped_lstm, ego_lstm;
    Tensor Hcat;
    nn::Attention::Trace attention;
    Tensor context;
    double logit = 0.0;
    double probability = 0.0;
  };

  double forward(const Sample& sample, Trace* trace = nullptr) const;
  // Accumulates gradients of (dloss/dlogit * logit) into the parameters.
  void backward(const Trace& trace, double dlogit);

  // Width of the concatenated recurrent state fed to attention.
  std::size_t recurrent_width() const;

  Tensor mask_dynamics(const Tensor& dyn, DynamicsFields fields) const;

 private:
  ModelConfig config_;
  nn::Parameter W1_, W2_, a1_, K_, kb_, a2_;
  nn::Lstm graph_lstm_, ped_lstm_, ego_lstm_;
  nn::Attention attention_;
  nn::Parameter dense_w_, dense_b_;
};

struct Checkpoint {
  ModelConfig model;
  NormalizationManifest manifest;
  std::uint64_t config_hash = 0;
  std::string run_config;  // serialized run configuration (JSON)
  std::vector<nn::Parameter> parameters;
};

Checkpoint make_checkpoint(const GraphSimModel& model, const NormalizationManifest& manifest,
                           std::uint64_t config_hash, std::string run_config);
GraphSimModel model_from_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

struct TrainLogEntry {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogEntry> log;
  nn::ClassWeights weights;
};

// Mini-batch Adam with w_pos = N_neg / N_pos.
TrainResult train(const std::vector<Sample>& samples, const ModelConfig& model_config,
                  const TrainConfig& train_config, const NormalizationManifest& manifest,
                  std::uint64_t config_hash = 0, std::string run_config = "{}");

std::string train_log_csv(const std::vector<TrainLogEntry>& log);

struct Prediction {
  double probability = 0.0;
  int label = 0;
};

// Label is 1 when probability >= 0.5.
Prediction predict(const Checkpoint& ckpt, const Sample& sample);
Prediction predict(const GraphSimModel& model, const NormalizationManifest& manifest,
                   const Sample& sample);

}  // namespace graphsim
