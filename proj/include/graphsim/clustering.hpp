#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphsim/scene.hpp"

namespace graphsim {

struct ClusteringParams {
  double ped_speed_threshold = 0.2;
  double vehicle_speed_threshold = 2.0;
  double bicycle_speed_threshold = 2.0;
  double ped_eps = 1.5;
  double vehicle_eps = 10.0;
  double bicycle_eps = 5.0;
  int min_pts = 1;
  double opposite_angle_deg = 90.0;
  int kmeans_max_iterations = 100;
  SpeedDefinition speed_definition = SpeedDefinition::DisplacementOverRate;
  // Ablation switches.
  bool enabled = true;               // false: every object is its own cluster
  bool pedestrian_orientation = true;
  bool vehicle_orientation = true;

  double speed_threshold(ObjectClass c) const;
  double eps(ObjectClass c) const;
  void validate() const;
};

enum class Motion { Stationary, Moving };
enum class Facing { Same, Opposite };
enum class Divergence { Toward, Away };

struct Cluster {
  std::vector<std::string> members;  // sorted by id
  ObjectClass cls = ObjectClass::Pedestrian;
  Motion motion = Motion::Stationary;
};

struct ClusterSet {
  int frame = 0;
  std::vector<Cluster> clusters;  // sorted by first member id

  // Index of the cluster holding id, or -1.
  int cluster_of(const std::string& id) const;
};

// Snapshot of one road user at one frame, the only input clustering needs.
struct FrameObject {
  std::string id;
  ObjectClass cls = ObjectClass::Pedestrian;
  Vec2 location;
  Vec2 orientation{1.0, 0.0};
  std::optional<Vec2> previous_location;  // empty at sequence start or after absence
};

// Moving iff speed >= class threshold.
Motion classify_motion(double speed, ObjectClass cls, const ClusteringParams& params);

// Cluster label per point (0-based, in order of discovery). Noise (only
// possible with min_pts > 1) is labelled -1.
std::vector<int> dbscan(const std::vector<Vec2>& points, double eps, int min_pts = 1);

Facing orientation_relation(Vec2 a, Vec2 b, double opposite_angle_deg = 90.0);

Divergence divergence_relation(Vec2 current_i, Vec2 current_j, Vec2 previous_i,
                               Vec2 previous_j);

// Moving-pedestrian refinement: components of the keep-together relation.
std::vector<Cluster> refine_pedestrian_cluster(const Cluster& cluster,
                                               const std::vector<FrameObject>& objects,
                                               const ClusteringParams& params);

// 2-means on orientation vectors with farthest-pair initialisation.
std::vector<Cluster> kmeans_orientation_split(const Cluster& cluster,
                                              const std::vector<FrameObject>& objects,
                                              int max_iterations = 100);

double object_speed(const FrameObject& o, double frame_rate, SpeedDefinition def);

ClusterSet cluster_objects(std::vector<FrameObject> objects, double frame_rate,
                           const ClusteringParams& params, int frame = 0);

// Snapshot of present non-ego users at frame t. Objects have no history at
// sequence_start (speed 0, divergence "toward").
std::vector<FrameObject> frame_objects(const Scene& scene, int t, int sequence_start = 0);

ClusterSet cluster_frame(const Scene& scene, int t, const ClusteringParams& params,
                         int sequence_start = 0);

void canonicalize(ClusterSet& set);

}  // namespace graphsim
