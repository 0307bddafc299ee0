#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "graphsim/clustering.hpp"
#include "graphsim/ingest.hpp"
#include "graphsim/scene.hpp"

namespace graphsim {

enum class LaneTemplate { StraightRoad, TJunction };
enum class PedestrianBehaviour { Crosser, WalkerParallel, Stander };

inline constexpr double kLaneWidth = 3.5;
inline constexpr double kRoadHalfLength = 50.0;

struct ScenarioSpec {
  std::uint64_t seed = 7;
  std::string name = "synthetic";
  int frames = 80;
  double frame_rate = 10.0;
  LaneTemplate layout = LaneTemplate::StraightRoad;
  int crossers = 1;
  int walkers = 1;
  int standers = 1;
  int moving_vehicles = 2;
  int parked_vehicles = 0;
  int bicycles = 0;
  double velocity_noise = 0.05;  // m/s, per-frame jitter added to walking velocity
  int non_crosser_visible = 0;   // length of the visible run of walkers/standers; 0 = whole scene
  bool north_side_only = false;  // all pedestrians start on the y > 0 sidewalk

  void validate() const;
};

// Deterministic uniform/normal draws from raw 64-bit engine output, so the
// sequence does not depend on the standard library's distributions.
class SyntheticRng {
 public:
  explicit SyntheticRng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // Box-Muller
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

LaneGraph make_lane_graph(LaneTemplate layout);

LoadedScene generate_scene(const ScenarioSpec& spec);

// Scenes where crossers walk straight at the road from the north sidewalk
// and non-crossers walk along it.
std::vector<LoadedScene> separable_dataset(int n_pedestrians, std::uint64_t seed,
                                           double positive_fraction = 0.5);

// Every target stands at the curb. A parked group of vehicles sits in the
// near lane, upstream of the target for non-crossers and at the mirrored
// downstream offset for crossers, so only the signed lane distance tells the
// classes apart.
std::vector<LoadedScene> directional_group_dataset(int n_pedestrians, std::uint64_t seed);

// Features the separable set is built around: mean speed toward the road
// and the angle between heading and the road direction (radians).
struct ApproachFeatures {
  double approach_speed = 0.0;
  double heading_angle = 0.0;
};
ApproachFeatures approach_features(const Scene& scene, const ObservationWindow& window);

// Exhaustive re-execution of the clustering rules, only for tests. Requires
// min_pts == 1. Returns sorted member lists, sorted by first member.
std::vector<std::vector<std::string>> brute_force_cluster_oracle(
    const std::vector<FrameObject>& objects, double frame_rate, const ClusteringParams& params);

}  // namespace graphsim
