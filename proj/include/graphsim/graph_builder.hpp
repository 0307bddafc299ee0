#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graphsim/clustering.hpp"
#include "graphsim/scene.hpp"
#include "graphsim/tensor.hpp"

namespace graphsim {

inline constexpr std::size_t kFeatureSize = 35;
inline constexpr std::size_t kSectionSize = 7;

// Training-set maxima used to rescale speed and size features.
struct NormalizationManifest {
  double max_speed = 0.0;
  double max_length = 0.0;
  double max_width = 0.0;
  double d_thresh = 20.0;
  bool fitted = false;

  friend bool operator==(const NormalizationManifest&, const NormalizationManifest&) = default;
};

enum class NodeRole { TargetPedestrian = 0, Ego = 1, OtherPedestrian = 2, Vehicle = 3, Bicycle = 4 };

enum class EdgeMode { GraphSim, InverseDistance };
enum class NodeFeatures { Full, LocationsOnly };
enum class AdjacencyNormalization { None, Symmetric };

struct GraphOptions {
  EdgeMode edge_mode = EdgeMode::GraphSim;
  NodeFeatures node_features = NodeFeatures::Full;
  bool signed_rel_coords = false;
  ClusteringParams clustering;
};

using FeatureVector = std::array<double, kFeatureSize>;

// min(d, d_thresh) / d_thresh. Callers pass non-negative distances.
double normalize_distance(double d, double d_thresh = 20.0);

struct NodeSnapshot {
  NodeRole role = NodeRole::OtherPedestrian;
  Vec2 location;
  double speed = 0.0;
  double length = 0.0;
  double width = 0.0;
};

NodeRole role_for(ObjectClass cls, bool is_target);

FeatureVector encode_node(const NodeSnapshot& node, Vec2 target_location,
                          const NormalizationManifest& manifest, const GraphOptions& options);

// Signed distance along the lane nearest the pedestrian: positive when the
// object is upstream (approaching), negative once it has passed. Empty when
// the object is not on a drivable area.
std::optional<double> lane_signed_distance(Vec2 object, Vec2 pedestrian, const LaneGraph& lanes);

// Per-frame node layout: index 0 is the target pedestrian. cluster[i] is a
// cluster index or -1 for "no cluster". Absent nodes are flagged.
struct FrameGraphInput {
  std::vector<Vec2> locations;
  std::vector<int> cluster;
  std::vector<bool> present;
};

Tensor build_B(const FrameGraphInput& frame, const LaneGraph& lanes, double d_thresh = 20.0);
Tensor build_D(const FrameGraphInput& frame, double d_thresh = 20.0);
Tensor build_A(const Tensor& B, const Tensor& D);
// Star graph with min(1, 1/d) weights and no clustering.
Tensor build_inverse_distance_A(const FrameGraphInput& frame);

// D^{-1/2} A D^{-1/2} with row-sum degrees.
Tensor normalize_adjacency(const Tensor& A, AdjacencyNormalization mode);

struct GraphTensors {
  Tensor V;  // N x Q x T
  Tensor A;  // N x N x T
  std::vector<Tensor> B;  // per frame N x N (GraphSim mode only)
  std::vector<Tensor> D;
  std::vector<std::string> node_ids;  // node_ids[0] is the target pedestrian
  NormalizationManifest manifest;

  std::size_t nodes() const { return node_ids.size(); }
  std::size_t frames() const { return V.rank() == 3 ? V.dim(2) : 0; }
  Tensor frame_adjacency(std::size_t t) const;  // N x N
  Tensor frame_features(std::size_t t) const;   // N x Q
};

// Speed of a user at frame t inside a sequence starting at sequence_start.
double sequence_speed(const RoadUser& user, int t, int sequence_start, double frame_rate,
                      SpeedDefinition def);

GraphTensors assemble_sequence(const Scene& scene, const ObservationWindow& window,
                               const std::vector<ClusterSet>& clusters,
                               const NormalizationManifest& manifest,
                               const GraphOptions& options);

// Clusters every window frame, then assembles.
GraphTensors build_window_graph(const Scene& scene, const ObservationWindow& window,
                                const NormalizationManifest& manifest,
                                const GraphOptions& options);

NormalizationManifest fit_manifest(const std::vector<ObservationWindow>& windows,
                                   SpeedDefinition def, double d_thresh = 20.0);

// Adds absent-object rows so the graph has n nodes.
GraphTensors pad_nodes(const GraphTensors& g, std::size_t n);

void dump_graph_csv(const std::filesystem::path& dir, const GraphTensors& g);

}  // namespace graphsim
