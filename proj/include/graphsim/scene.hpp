#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace graphsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

enum class ObjectClass { Pedestrian, Vehicle, Bicycle, EgoVehicle };

const char* to_string(ObjectClass c);
// Throws DataError on unknown names.
ObjectClass parse_object_class(const std::string& name);

struct FrameState {
  Vec2 location;
  Vec2 orientation{1.0, 0.0};  // unit heading
  double length = 0.0;
  double width = 0.0;
  double timestamp = 0.0;
  bool present = false;
  bool interpolated = false;  // provenance carried from densification
};

struct RoadUser {
  std::string id;
  ObjectClass cls = ObjectClass::Pedestrian;
  std::vector<FrameState> states;  // one entry per scene frame

  bool present(int t) const {
    return t >= 0 && t < static_cast<int>(states.size()) && states[t].present;
  }
};

struct Polyline {
  std::vector<Vec2> vertices;  // travel direction = vertex order
};

struct LaneGraph {
  std::vector<Polyline> lanes;
  std::vector<std::vector<Vec2>> drivable_polygons;

  // Boundary points count as inside.
  bool is_drivable(Vec2 p) const;
};

struct Scene {
  std::string name;
  double frame_rate = 10.0;
  int frames = 0;
  std::vector<double> timestamps;
  std::vector<RoadUser> users;  // excludes the ego vehicle
  RoadUser ego;
  LaneGraph lanes;

  const RoadUser* find_user(const std::string& id) const;
};

// Behavioural annotation for one pedestrian. Frame indices are 0-based scene frames.
struct BehaviourRecord {
  std::string pedestrian_id;
  bool will_cross = false;
  std::optional<int> crossing_start_frame;
  std::optional<int> crossing_end_frame;
};

struct ObservationWindow {
  const Scene* scene = nullptr;
  std::string target_id;
  int first_frame = 0;
  int length = 0;  // T
  int label = 0;

  int last_frame() const { return first_frame + length - 1; }
};

enum class SpeedDefinition {
  DisplacementOverRate,  // displacement / frame_rate
  Physical,      // displacement * frame_rate (m/s)
};

// Speed at frame t. Frame 0 has no history and yields 0.
double compute_speed(const RoadUser& user, int t, double frame_rate,
                     SpeedDefinition def = SpeedDefinition::DisplacementOverRate);

// Per-frame displacement l_t - l_{t-1}; (0,0) at frame 0.
Vec2 compute_velocity(const RoadUser& user, int t);

struct WindowSpec {
  int length = 5;
  int stride = 2;
  double pre_event_min_s = 1.0;
  double pre_event_max_s = 2.0;
};

// Windows for one pedestrian, ordered by first frame. Crossers: windows end
// between pre_event_max_s and pre_event_min_s before crossing start
// (both inclusive). Non-crossers: any window inside the visible span,
// which ends at the first frame the pedestrian is no longer visible.
std::vector<ObservationWindow> extract_windows(const Scene& scene,
                                               const BehaviourRecord& record,
                                               const WindowSpec& spec);

// Structural checks: identical state lengths, timestamp spacing, unit
// orientations and positive sizes on present frames. Throws DataError.
void validate_scene(const Scene& scene);

}  // namespace graphsim
