#include "graphsim/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "graphsim/error.hpp"

namespace graphsim {

using nlohmann::json;

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

double Quaternion::yaw() const {
  return std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
}

Quaternion Quaternion::from_yaw(double yaw) {
  return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
}

namespace {

Quaternion normalized(Quaternion q) {
  const double n = q.norm();
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

}  // namespace

Quaternion slerp(Quaternion a, Quaternion b, double u) {
  double cos_theta = a.dot(b);
  if (cos_theta < 0.0) {
    b = {-b.w, -b.x, -b.y, -b.z};
    cos_theta = -cos_theta;
  }
  double wa = 1.0 - u;
  double wb = u;
  if (cos_theta < 1.0 - 1e-12) {
    const double theta = std::acos(std::min(cos_theta, 1.0));
    const double s = std::sin(theta);
    wa = std::sin((1.0 - u) * theta) / s;
    wb = std::sin(u * theta) / s;
  }
  return normalized({wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y,
                     wa * a.z + wb * b.z});
}

DensifiedTrack densify(const std::vector<RawAnnotation>& track, double target_rate) {
  if (target_rate <= 0.0) throw ConfigError("densify: target rate must be positive");
  DensifiedTrack out;
  if (track.empty()) throw DataError("densify: empty track");
  out.id = track.front().id;
  for (std::size_t i = 1; i < track.size(); ++i) {
    if (!(track[i].timestamp > track[i - 1].timestamp)) {
      throw DataError("densify: timestamps of '" + out.id + "' not strictly increasing");
    }
  }
  if (track.size() == 1) {
    out.annotations = track;
    out.provenance = {Provenance::Original};
    out.single_keyframe = true;
    return out;
  }
  for (std::size_t i = 0; i + 1 < track.size(); ++i) {
    const RawAnnotation& a = track[i];
    const RawAnnotation& b = track[i + 1];
    out.annotations.push_back(a);
    out.provenance.push_back(Provenance::Original);
    const double gap = b.timestamp - a.timestamp;
    const long steps = std::max(1L, std::lround(gap * target_rate));
    for (long k = 1; k < steps; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(steps);
      RawAnnotation mid = a;
      mid.timestamp = a.timestamp + u * gap;
      for (int d = 0; d < 3; ++d) {
        mid.translation[d] = a.translation[d] + u * (b.translation[d] - a.translation[d]);
        mid.size[d] = a.size[d] + u * (b.size[d] - a.size[d]);
      }
      mid.rotation = slerp(a.rotation, b.rotation, u);
      mid.interpolated = true;
      out.annotations.push_back(mid);
      out.provenance.push_back(Provenance::Interpolated);
    }
  }
  out.annotations.push_back(track.back());
  out.provenance.push_back(Provenance::Original);
  return out;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(source + ": " + e.what());
  }
}

const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw DataError(where + ": missing field '" + name + "'");
  }
  return obj.at(name);
}

double number(const json& obj, const char* name, const std::string& where) {
  const json& v = field(obj, name, where);
  if (!v.is_number()) throw DataError(where + ": field '" + name + "' must be a number");
  return v.get<double>();
}

template <std::size_t N>
std::array<double, N> number_array(const json& obj, const char* name,
                                   const std::string& where) {
  const json& v = field(obj, name, where);
  if (!v.is_array() || v.size() != N) {
    throw DataError(where + ": field '" + name + "' must be an array of " +
                    std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) {
      throw DataError(where + ": field '" + name + "' must contain numbers");
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

std::string string_field(const json& obj, const char* name, const std::string& where) {
  const json& v = field(obj, name, where);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw DataError(where + ": field '" + name + "' must be a string");
}

std::optional<int> optional_frame(const json& obj, const char* name,
                                  const std::string& where) {
  if (!obj.contains(name) || obj.at(name).is_null()) return std::nullopt;
  if (!obj.at(name).is_number_integer()) {
    throw DataError(where + ": field '" + name + "' must be an integer frame index");
  }
  return obj.at(name).get<int>();
}

BehaviourRecord parse_behaviour(const json& b, const std::string& where) {
  BehaviourRecord r;
  r.pedestrian_id = string_field(b, "pedestrian_id", where);
  const json& wc = field(b, "will_cross", where);
  if (!wc.is_boolean()) throw DataError(where + ": field 'will_cross' must be boolean");
  r.will_cross = wc.get<bool>();
  r.crossing_start_frame = optional_frame(b, "crossing_start_frame", where);
  r.crossing_end_frame = optional_frame(b, "crossing_end_frame", where);
  if (r.will_cross && !r.crossing_start_frame) {
    throw DataError(where + ": crossing pedestrian requires 'crossing_start_frame'");
  }
  if (r.crossing_start_frame && r.crossing_end_frame &&
      *r.crossing_end_frame < *r.crossing_start_frame) {
    throw DataError(where + ": crossing end precedes start");
  }
  return r;
}

json behaviour_to_json(const BehaviourRecord& r) {
  json b;
  b["pedestrian_id"] = r.pedestrian_id;
  b["will_cross"] = r.will_cross;
  b["crossing_start_frame"] =
      r.crossing_start_frame ? json(*r.crossing_start_frame) : json(nullptr);
  b["crossing_end_frame"] = r.crossing_end_frame ? json(*r.crossing_end_frame) : json(nullptr);
  return b;
}

long long time_key(double t) { return std::llround(t * 1e6); }

}  // namespace

AnnotationFile parse_annotation_json(const std::string& text, const std::string& source) {
  const json root = parse_json(text, source);
  AnnotationFile file;
  file.frame_rate = number(root, "frame_rate", source);
  if (!(file.frame_rate > 0.0)) throw DataError(source + ": 'frame_rate' must be positive");
  const json& frames = field(root, "frames", source);
  if (!frames.is_array()) throw DataError(source + ": 'frames' must be an array");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string fwhere = source + ": frames[" + std::to_string(f) + "]";
    RawFrame frame;
    frame.timestamp = number(frames[f], "timestamp", fwhere);
    const json& objects = field(frames[f], "objects", fwhere);
    if (!objects.is_array()) throw DataError(fwhere + ": 'objects' must be an array");
    for (std::size_t o = 0; o < objects.size(); ++o) {
      const std::string where = fwhere + ".objects[" + std::to_string(o) + "]";
      const json& obj = objects[o];
      RawAnnotation a;
      a.id = string_field(obj, "id", where);
      a.cls = parse_object_class(string_field(obj, "class", where));
      a.translation = number_array<3>(obj, "translation", where);
      const auto q = number_array<4>(obj, "rotation", where);
      a.rotation = {q[0], q[1], q[2], q[3]};
      if (std::abs(a.rotation.norm() - 1.0) > 1e-3) {
        throw DataError(where + ": rotation quaternion is not unit length");
      }
      a.rotation = normalized(a.rotation);
      a.size = number_array<3>(obj, "size", where);
      if (a.size[0] <= 0.0 || a.size[1] <= 0.0 || a.size[2] <= 0.0) {
        throw DataError(where + ": 'size' entries must be positive");
      }
      a.timestamp = frame.timestamp;
      if (obj.contains("interpolated")) a.interpolated = obj.at("interpolated").get<bool>();
      frame.objects.push_back(std::move(a));
    }
    file.frames.push_back(std::move(frame));
  }
  if (root.contains("behaviours")) {
    const json& bs = root.at("behaviours");
    if (!bs.is_array()) throw DataError(source + ": 'behaviours' must be an array");
    for (std::size_t i = 0; i < bs.size(); ++i) {
      file.behaviours.push_back(
          parse_behaviour(bs[i], source + ": behaviours[" + std::to_string(i) + "]"));
    }
  }
  return file;
}

AnnotationFile read_annotation_file(const std::filesystem::path& path) {
  return parse_annotation_json(read_text(path), path.string());
}

std::string annotation_to_json(const AnnotationFile& file) {
  json root;
  root["frame_rate"] = file.frame_rate;
  json frames = json::array();
  for (const auto& f : file.frames) {
    json jf;
    jf["timestamp"] = f.timestamp;
    json objs = json::array();
    for (const auto& a : f.objects) {
      json o;
      o["id"] = a.id;
      o["class"] = to_string(a.cls);
      o["translation"] = a.translation;
      o["rotation"] = {a.rotation.w, a.rotation.x, a.rotation.y, a.rotation.z};
      o["size"] = a.size;
      if (a.interpolated) o["interpolated"] = true;
      objs.push_back(std::move(o));
    }
    jf["objects"] = std::move(objs);
    frames.push_back(std::move(jf));
  }
  root["frames"] = std::move(frames);
  json bs = json::array();
  for (const auto& b : file.behaviours) bs.push_back(behaviour_to_json(b));
  root["behaviours"] = std::move(bs);
  return root.dump(1) + "\n";
}

void write_annotation_file(const std::filesystem::path& path, const AnnotationFile& file) {
  write_text(path, annotation_to_json(file));
}

AnnotationFile densify_annotations(const AnnotationFile& file, double target_rate) {
  std::map<std::string, std::vector<RawAnnotation>> tracks;
  for (const auto& f : file.frames) {
    for (const auto& a : f.objects) tracks[a.id].push_back(a);
  }
  std::map<long long, RawFrame> frames;
  for (const auto& f : file.frames) frames[time_key(f.timestamp)].timestamp = f.timestamp;
  for (const auto& [id, track] : tracks) {
    const DensifiedTrack dense = densify(track, target_rate);
    for (const auto& a : dense.annotations) {
      RawFrame& frame = frames[time_key(a.timestamp)];
      if (frame.objects.empty() && frame.timestamp == 0.0) frame.timestamp = a.timestamp;
      frame.objects.push_back(a);
    }
  }
  AnnotationFile out;
  out.frame_rate = target_rate;
  std::map<long long, int> new_index;
  for (auto& [key, frame] : frames) {
    std::sort(frame.objects.begin(), frame.objects.end(),
              [](const RawAnnotation& a, const RawAnnotation& b) { return a.id < b.id; });
    new_index[key] = static_cast<int>(out.frames.size());
    out.frames.push_back(std::move(frame));
  }
  auto remap = [&](std::optional<int> f) -> std::optional<int> {
    if (!f) return f;
    if (*f < 0 || *f >= static_cast<int>(file.frames.size())) {
      throw DataError("behaviour frame index " + std::to_string(*f) + " out of range");
    }
    return new_index.at(time_key(file.frames[*f].timestamp));
  };
  for (auto b : file.behaviours) {
    b.crossing_start_frame = remap(b.crossing_start_frame);
    b.crossing_end_frame = remap(b.crossing_end_frame);
    out.behaviours.push_back(std::move(b));
  }
  return out;
}

LaneGraph parse_map_json(const std::string& text, const std::string& source) {
  const json root = parse_json(text, source);
  LaneGraph g;
  auto read_points = [&](const json& arr, const std::string& where) {
    if (!arr.is_array()) throw DataError(where + ": expected an array of [x,y] points");
    std::vector<Vec2> pts;
    for (const auto& p : arr) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw DataError(where + ": points must be [x,y] number pairs");
      }
      pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return pts;
  };
  const json& lanes = field(root, "lanes", source);
  if (!lanes.is_array()) throw DataError(source + ": 'lanes' must be an array");
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const std::string where = source + ": lanes[" + std::to_string(i) + "]";
    Polyline line{read_points(lanes[i], where)};
    if (line.vertices.size() < 2) throw DataError(where + ": needs at least 2 vertices");
    for (std::size_t k = 1; k < line.vertices.size(); ++k) {
      if (line.vertices[k] == line.vertices[k - 1]) {
        throw DataError(where + ": consecutive vertices must be distinct");
      }
    }
    g.lanes.push_back(std::move(line));
  }
  const json& polys = field(root, "drivable_polygons", source);
  if (!polys.is_array()) throw DataError(source + ": 'drivable_polygons' must be an array");
  for (std::size_t i = 0; i < polys.size(); ++i) {
    g.drivable_polygons.push_back(
        read_points(polys[i], source + ": drivable_polygons[" + std::to_string(i) + "]"));
  }
  return g;
}

LaneGraph read_map_file(const std::filesystem::path& path) {
  return parse_map_json(read_text(path), path.string());
}

void write_map_file(const std::filesystem::path& path, const LaneGraph& lanes) {
  json root;
  auto points = [](const std::vector<Vec2>& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back({p.x, p.y});
    return arr;
  };
  root["lanes"] = json::array();
  for (const auto& l : lanes.lanes) root["lanes"].push_back(points(l.vertices));
  root["drivable_polygons"] = json::array();
  for (const auto& p : lanes.drivable_polygons) root["drivable_polygons"].push_back(points(p));
  write_text(path, root.dump(1) + "\n");
}

LoadedScene scene_from_annotations(const AnnotationFile& file, LaneGraph lanes,
                                   std::string name) {
  LoadedScene out;
  Scene& s = out.scene;
  s.name = std::move(name);
  s.frame_rate = file.frame_rate;
  s.frames = static_cast<int>(file.frames.size());
  s.lanes = std::move(lanes);
  std::map<std::string, RoadUser> users;
  bool have_ego = false;
  for (int t = 0; t < s.frames; ++t) {
    const RawFrame& f = file.frames[t];
    s.timestamps.push_back(f.timestamp);
    for (const auto& a : f.objects) {
      auto [it, inserted] = users.try_emplace(a.id);
      RoadUser& u = it->second;
      if (inserted) {
        u.id = a.id;
        u.cls = a.cls;
        u.states.assign(s.frames, FrameState{});
      } else if (u.cls != a.cls) {
        throw DataError(s.name + ": object '" + a.id + "' changes class");
      }
      FrameState& st = u.states[t];
      if (st.present) {
        throw DataError(s.name + ": object '" + a.id + "' duplicated in frame " +
                        std::to_string(t));
      }
      const double yaw = a.rotation.yaw();
      st.location = {a.translation[0], a.translation[1]};
      st.orientation = {std::cos(yaw), std::sin(yaw)};
      st.length = a.size[0];
      st.width = a.size[1];
      st.timestamp = f.timestamp;
      st.present = true;
      st.interpolated = a.interpolated;
    }
  }
  for (auto& [id, u] : users) {
    for (int t = 0; t < s.frames; ++t) u.states[t].timestamp = s.timestamps[t];
    if (u.cls == ObjectClass::EgoVehicle) {
      if (have_ego) throw DataError(s.name + ": more than one ego-vehicle");
      s.ego = std::move(u);
      have_ego = true;
    } else {
      s.users.push_back(std::move(u));
    }
  }
  if (!have_ego) throw DataError(s.name + ": no ego-vehicle object");
  validate_scene(s);
  out.behaviours = file.behaviours;
  for (const auto& b : out.behaviours) {
    const RoadUser* u = s.find_user(b.pedestrian_id);
    if (u == nullptr || u->cls != ObjectClass::Pedestrian) {
      throw DataError(s.name + ": behaviour record for unknown pedestrian '" +
                      b.pedestrian_id + "'");
    }
  }
  return out;
}

LoadedScene load_scene(const std::filesystem::path& annotation_path,
                       const std::filesystem::path& map_path) {
  AnnotationFile file = read_annotation_file(annotation_path);
  LaneGraph lanes = read_map_file(map_path);
  return scene_from_annotations(file, std::move(lanes), annotation_path.stem().string());
}

AnnotationFile annotations_from_scene(const Scene& scene,
                                      const std::vector<BehaviourRecord>& behaviours) {
  AnnotationFile file;
  file.frame_rate = scene.frame_rate;
  file.behaviours = behaviours;
  std::vector<const RoadUser*> all;
  all.push_back(&scene.ego);
  for (const auto& u : scene.users) all.push_back(&u);
  std::sort(all.begin(), all.end(),
            [](const RoadUser* a, const RoadUser* b) { return a->id < b->id; });
  for (int t = 0; t < scene.frames; ++t) {
    RawFrame frame;
    frame.timestamp = scene.timestamps[t];
    for (const RoadUser* u : all) {
      const FrameState& st = u->states[t];
      if (!st.present) continue;
      RawAnnotation a;
      a.id = u->id;
      a.cls = u->cls;
      a.translation = {st.location.x, st.location.y, 0.0};
      a.rotation = Quaternion::from_yaw(std::atan2(st.orientation.y, st.orientation.x));
      a.size = {st.length, st.width, u->cls == ObjectClass::Pedestrian ? 1.7 : 1.5};
      a.timestamp = frame.timestamp;
      a.interpolated = st.interpolated;
      frame.objects.push_back(a);
    }
    file.frames.push_back(std::move(frame));
  }
  return file;
}

std::vector<FrameLabel> materialize_frame_labels(const BehaviourRecord& record,
                                                 const std::vector<int>& visible_frames) {
  std::vector<FrameLabel> out;
  out.reserve(visible_frames.size());
  if (!record.will_cross) {
    for (int f : visible_frames) out.push_back({f, CrossingState::NotCrossing});
    return out;
  }
  if (!record.crossing_start_frame) {
    throw DataError("crossing record for '" + record.pedestrian_id + "' lacks a start frame");
  }
  const int start = *record.crossing_start_frame;
  if (!std::binary_search(visible_frames.begin(), visible_frames.end(), start)) {
    throw DataError("crossing start frame " + std::to_string(start) + " of '" +
                    record.pedestrian_id + "' is not a visible frame");
  }
  const int end = record.crossing_end_frame.value_or(
      visible_frames.empty() ? start : visible_frames.back());
  for (int f : visible_frames) {
    const bool crossing = f >= start && f <= end;
    out.push_back({f, crossing ? CrossingState::Crossing : CrossingState::NotCrossing});
  }
  return out;
}

DatasetStats compute_stats(const std::vector<LoadedScene>& dataset) {
  DatasetStats st;
  double orig_span = 0.0;
  long orig_gaps = 0;
  for (const auto& ls : dataset) {
    const Scene& s = ls.scene;
    st.frame_rate = std::max(st.frame_rate, s.frame_rate);
    for (const auto& b : ls.behaviours) {
      ++st.behavioural_pedestrians;
      if (b.will_cross) {
        ++st.crossing;
      } else {
        ++st.non_crossing;
      }
      if (const RoadUser* u = s.find_user(b.pedestrian_id)) {
        for (const auto& fs : u->states) st.per_frame_behaviour += fs.present ? 1 : 0;
      }
    }
    std::vector<double> original_times;
    for (int t = 0; t < s.frames; ++t) {
      bool has_original = false;
      for (const auto& u : s.users) {
        const FrameState& fs = u.states[t];
        if (!fs.present) continue;
        long& counter = u.cls == ObjectClass::Pedestrian
                            ? (fs.interpolated ? st.ped_boxes_new : st.ped_boxes_original)
                            : (fs.interpolated ? st.other_boxes_new : st.other_boxes_original);
        ++counter;
        has_original = has_original || !fs.interpolated;
      }
      if (has_original) original_times.push_back(s.timestamps[t]);
    }
    if (original_times.size() >= 2) {
      orig_span += original_times.back() - original_times.front();
      orig_gaps += static_cast<long>(original_times.size()) - 1;
    }
  }
  if (orig_gaps > 0 && orig_span > 0.0) st.original_frame_rate = orig_gaps / orig_span;
  return st;
}

std::string stats_to_csv(const DatasetStats& s) {
  std::ostringstream os;
  auto rate = [](double hz) {
    if (hz <= 0.0) return std::string("-");
    std::ostringstream r;
    r << std::lround(hz * 10.0) / 10.0 << "Hz";
    return r.str();
  };
  os << "Annt.,New,Original,Total\n";
  os << "# Ped. with Beh.," << s.behavioural_pedestrians << ",-," << s.behavioural_pedestrians
     << "\n";
  os << "# Cross. Peds.," << s.crossing << ",-," << s.crossing << "\n";
  os << "# Non-cross Peds.," << s.non_crossing << ",-," << s.non_crossing << "\n";
  os << "# Per-frame beh. annt.," << s.per_frame_behaviour << ",-," << s.per_frame_behaviour
     << "\n";
  os << "# Ped. box annt.," << s.ped_boxes_new << "," << s.ped_boxes_original << ","
     << s.ped_boxes_new + s.ped_boxes_original << "\n";
  os << "# Other box annt.," << s.other_boxes_new << "," << s.other_boxes_original << ","
     << s.other_boxes_new + s.other_boxes_original << "\n";
  os << "Annt. frame rate," << rate(s.frame_rate) << "," << rate(s.original_frame_rate) << ","
     << rate(s.frame_rate) << "\n";
  return os.str();
}

double Box2D::area() const { return std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1); }

double iou(const Box2D& a, const Box2D& b) {
  const Box2D inter{std::max(a.x1, b.x1), std::max(a.y1, b.y1), std::min(a.x2, b.x2),
                    std::min(a.y2, b.y2)};
  const double i = inter.area();
  const double u = a.area() + b.area() - i;
  return u > 0.0 ? i / u : 0.0;
}

VerificationReport verify_interpolation(const std::vector<ProjectedFrame>& projected,
                                        const std::vector<DetectionFrame>& detections,
                                        double iou_threshold) {
  if (projected.size() != detections.size()) {
    throw DataError("verify: projected file has " + std::to_string(projected.size()) +
                    " frames, detections file has " + std::to_string(detections.size()));
  }
  struct Acc {
    int frames = 0;
    double sum = 0.0;
    double min = 1.0;
  };
  std::map<std::string, Acc> acc;
  VerificationReport report;
  for (std::size_t f = 0; f < projected.size(); ++f) {
    if (std::abs(projected[f].timestamp - detections[f].timestamp) > 1e-6) {
      throw DataError("verify: frame " + std::to_string(f) + " timestamps differ");
    }
    for (const auto& pb : projected[f].boxes) {
      double best = 0.0;
      for (const auto& d : detections[f].boxes) {
        if (d.cls == pb.cls) best = std::max(best, iou(pb.box, d.box));
      }
      Acc& a = acc[pb.id];
      ++a.frames;
      a.sum += best;
      a.min = std::min(a.min, best);
      if (pb.interpolated && best < iou_threshold) {
        report.unmatched.push_back({pb.id, static_cast<int>(f), projected[f].timestamp, best});
      }
    }
  }
  for (const auto& [id, a] : acc) {
    report.objects.push_back({id, a.frames, a.sum / a.frames, a.min});
  }
  return report;
}

namespace {

Box2D parse_box(const json& b, const std::string& where) {
  return {number(b, "x1", where), number(b, "y1", where), number(b, "x2", where),
          number(b, "y2", where)};
}

}  // namespace

std::vector<ProjectedFrame> read_projected_file(const std::filesystem::path& path) {
  const std::string source = path.string();
  const json root = parse_json(read_text(path), source);
  std::vector<ProjectedFrame> out;
  const json& frames = field(root, "frames", source);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string fw = source + ": frames[" + std::to_string(f) + "]";
    ProjectedFrame pf;
    pf.timestamp = number(frames[f], "timestamp", fw);
    const json& boxes = field(frames[f], "boxes", fw);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const std::string w = fw + ".boxes[" + std::to_string(i) + "]";
      ProjectedBox pb;
      pb.id = string_field(boxes[i], "id", w);
      pb.cls = parse_object_class(string_field(boxes[i], "class", w));
      pb.box = parse_box(boxes[i], w);
      pb.interpolated = boxes[i].value("interpolated", false);
      pf.boxes.push_back(std::move(pb));
    }
    out.push_back(std::move(pf));
  }
  return out;
}

std::vector<DetectionFrame> read_detections_file(const std::filesystem::path& path) {
  const std::string source = path.string();
  const json root = parse_json(read_text(path), source);
  std::vector<DetectionFrame> out;
  const json& frames = field(root, "frames", source);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string fw = source + ": frames[" + std::to_string(f) + "]";
    DetectionFrame df;
    df.timestamp = number(frames[f], "timestamp", fw);
    const json& boxes = field(frames[f], "boxes", fw);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const std::string w = fw + ".boxes[" + std::to_string(i) + "]";
      df.boxes.push_back(
          {parse_object_class(string_field(boxes[i], "class", w)), parse_box(boxes[i], w)});
    }
    out.push_back(std::move(df));
  }
  return out;
}

std::string report_to_json(const VerificationReport& report) {
  json root;
  root["objects"] = json::array();
  for (const auto& o : report.objects) {
    root["objects"].push_back({{"id", o.id},
                               {"frames", o.frames},
                               {"mean_best_iou", o.mean_best_iou},
                               {"min_best_iou", o.min_best_iou}});
  }
  root["unmatched_interpolated"] = json::array();
  for (const auto& u : report.unmatched) {
    root["unmatched_interpolated"].push_back({{"id", u.id},
                                              {"frame", u.frame},
                                              {"timestamp", u.timestamp},
                                              {"best_iou", u.best_iou}});
  }
  return root.dump(1) + "\n";
}

}  // namespace graphsim
