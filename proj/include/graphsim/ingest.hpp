#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graphsim/scene.hpp"

namespace graphsim {

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  // Heading about the vertical axis, radians.
  double yaw() const;
  static Quaternion from_yaw(double yaw);

  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

// Shortest-arc spherical interpolation; result is unit length.
Quaternion slerp(Quaternion a, Quaternion b, double u);

struct RawAnnotation {
  std::string id;
  ObjectClass cls = ObjectClass::Pedestrian;
  std::array<double, 3> translation{};
  Quaternion rotation;
  std::array<double, 3> size{};  // length, width, height
  double timestamp = 0.0;
  bool interpolated = false;

  friend bool operator==(const RawAnnotation&, const RawAnnotation&) = default;
};

enum class Provenance { Original, Interpolated };

struct DensifiedTrack {
  std::string id;
  std::vector<RawAnnotation> annotations;
  std::vector<Provenance> provenance;
  bool single_keyframe = false;  // nothing to interpolate
};

// Inserts evenly spaced annotations between consecutive keyframes so the
// output rate equals target_rate. Translation and size are linear, rotation
// is slerp. Keyframes are copied verbatim.
DensifiedTrack densify(const std::vector<RawAnnotation>& track, double target_rate);

struct RawFrame {
  double timestamp = 0.0;
  std::vector<RawAnnotation> objects;
};

// In-memory form of the scene annotation file.
struct AnnotationFile {
  double frame_rate = 2.0;
  std::vector<RawFrame> frames;
  std::vector<BehaviourRecord> behaviours;
};

AnnotationFile read_annotation_file(const std::filesystem::path& path);
AnnotationFile parse_annotation_json(const std::string& text, const std::string& source);
void write_annotation_file(const std::filesystem::path& path, const AnnotationFile& file);
std::string annotation_to_json(const AnnotationFile& file);

// Densifies every object track and remaps behaviour frame indices.
AnnotationFile densify_annotations(const AnnotationFile& file, double target_rate);

LaneGraph read_map_file(const std::filesystem::path& path);
LaneGraph parse_map_json(const std::string& text, const std::string& source);
void write_map_file(const std::filesystem::path& path, const LaneGraph& lanes);

struct LoadedScene {
  Scene scene;
  std::vector<BehaviourRecord> behaviours;
};

// Bird's-eye-view projection: height dropped, orientation from quaternion yaw.
LoadedScene scene_from_annotations(const AnnotationFile& file, LaneGraph lanes,
                                   std::string name);
LoadedScene load_scene(const std::filesystem::path& annotation_path,
                       const std::filesystem::path& map_path);

// Inverse of scene_from_annotations (height 1.7 m for pedestrians, 1.5 m otherwise).
AnnotationFile annotations_from_scene(const Scene& scene,
                                      const std::vector<BehaviourRecord>& behaviours);

enum class CrossingState { NotCrossing, Crossing };

struct FrameLabel {
  int frame = 0;
  CrossingState state = CrossingState::NotCrossing;
};

// visible_frames must be sorted ascending.
std::vector<FrameLabel> materialize_frame_labels(const BehaviourRecord& record,
                                                 const std::vector<int>& visible_frames);

struct DatasetStats {
  long behavioural_pedestrians = 0;
  long crossing = 0;
  long non_crossing = 0;
  long per_frame_behaviour = 0;
  long ped_boxes_new = 0;
  long ped_boxes_original = 0;
  long other_boxes_new = 0;
  long other_boxes_original = 0;
  double frame_rate = 0.0;
  double original_frame_rate = 0.0;
};

DatasetStats compute_stats(const std::vector<LoadedScene>& dataset);
std::string stats_to_csv(const DatasetStats& stats);

struct Box2D {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double area() const;
};

double iou(const Box2D& a, const Box2D& b);

struct ProjectedBox {
  std::string id;
  ObjectClass cls = ObjectClass::Pedestrian;
  Box2D box;
  bool interpolated = false;
};

struct Detection {
  ObjectClass cls = ObjectClass::Pedestrian;
  Box2D box;
};

struct ProjectedFrame {
  double timestamp = 0.0;
  std::vector<ProjectedBox> boxes;
};

struct DetectionFrame {
  double timestamp = 0.0;
  std::vector<Detection> boxes;
};

struct ObjectIouSummary {
  std::string id;
  int frames = 0;
  double mean_best_iou = 0.0;
  double min_best_iou = 0.0;
};

struct UnmatchedBox {
  std::string id;
  int frame = 0;
  double timestamp = 0.0;
  double best_iou = 0.0;
};

struct VerificationReport {
  std::vector<ObjectIouSummary> objects;
  std::vector<UnmatchedBox> unmatched;  // interpolated boxes below threshold
};

VerificationReport verify_interpolation(const std::vector<ProjectedFrame>& projected,
                                        const std::vector<DetectionFrame>& detections,
                                        double iou_threshold);

std::vector<ProjectedFrame> read_projected_file(const std::filesystem::path& path);
std::vector<DetectionFrame> read_detections_file(const std::filesystem::path& path);
std::string report_to_json(const VerificationReport& report);

}  // namespace graphsim
