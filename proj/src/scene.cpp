#include "graphsim/scene.hpp"

#include <algorithm>
#include <cmath>

#include "graphsim/error.hpp"

namespace graphsim {

const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Pedestrian: return "pedestrian";
    case ObjectClass::Vehicle: return "vehicle";
    case ObjectClass::Bicycle: return "bicycle";
    case ObjectClass::EgoVehicle: return "ego-vehicle";
  }
  return "unknown";
}

ObjectClass parse_object_class(const std::string& name) {
  if (name == "pedestrian") return ObjectClass::Pedestrian;
  if (name == "vehicle") return ObjectClass::Vehicle;
  if (name == "bicycle") return ObjectClass::Bicycle;
  if (name == "ego-vehicle") return ObjectClass::EgoVehicle;
  throw DataError("unknown object class '" + name + "'");
}

namespace {

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  constexpr double kTol = 1e-9;
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double cross = ab.x * ap.y - ab.y * ap.x;
  if (std::abs(cross) > kTol * std::max(1.0, ab.norm())) return false;
  const double t = ap.dot(ab);
  return t >= -kTol && t <= ab.dot(ab) + kTol;
}

bool in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(p, poly[i], poly[(i + 1) % n])) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

bool LaneGraph::is_drivable(Vec2 p) const {
  return std::any_of(drivable_polygons.begin(), drivable_polygons.end(),
                     [&](const auto& poly) { return in_polygon(p, poly); });
}

const RoadUser* Scene::find_user(const std::string& id) const {
  if (ego.id == id) return &ego;
  for (const auto& u : users) {
    if (u.id == id) return &u;
  }
  return nullptr;
}

double compute_speed(const RoadUser& user, int t, double frame_rate,
                     SpeedDefinition def) {
  if (t < 0 || !user.present(t)) {
    throw DataError("speed undefined: '" + user.id + "' absent at frame " +
                    std::to_string(t));
  }
  if (t == 0) return 0.0;
  if (!user.present(t - 1)) {
    throw DataError("speed undefined: '" + user.id + "' absent at frame " +
                    std::to_string(t - 1));
  }
  const double disp = distance(user.states[t].location, user.states[t - 1].location);
  return def == SpeedDefinition::DisplacementOverRate ? disp / frame_rate : disp * frame_rate;
}

Vec2 compute_velocity(const RoadUser& user, int t) {
  if (t < 0 || !user.present(t)) {
    throw DataError("velocity undefined: '" + user.id + "' absent at frame " +
                    std::to_string(t));
  }
  if (t == 0) return {};
  if (!user.present(t - 1)) {
    throw DataError("velocity undefined: '" + user.id + "' absent at frame " +
                    std::to_string(t - 1));
  }
  return user.states[t].location - user.states[t - 1].location;
}

namespace {

bool present_throughout(const RoadUser& u, int first, int last) {
  for (int t = first; t <= last; ++t) {
    if (!u.present(t)) return false;
  }
  return true;
}

}  // namespace

std::vector<ObservationWindow> extract_windows(const Scene& scene,
                                               const BehaviourRecord& record,
                                               const WindowSpec& spec) {
  if (spec.length < 2) throw ConfigError("observation length must be >= 2");
  if (spec.stride < 1) throw ConfigError("window stride must be >= 1");
  const RoadUser* ped = scene.find_user(record.pedestrian_id);
  if (ped == nullptr) {
    throw DataError("behaviour record references unknown pedestrian '" +
                    record.pedestrian_id + "'");
  }
  std::vector<ObservationWindow> out;
  const int T = spec.length;
  if (T > scene.frames) return out;

  auto first_visible = -1;
  for (int t = 0; t < scene.frames; ++t) {
    if (ped->present(t)) {
      first_visible = t;
      break;
    }
  }
  if (first_visible < 0) return out;

  int end_lo = 0;
  int end_hi = 0;
  if (record.will_cross) {
    if (!record.crossing_start_frame) {
      throw DataError("crossing pedestrian '" + record.pedestrian_id +
                      "' has no crossing start frame");
    }
    const int start = *record.crossing_start_frame;
    const int near = static_cast<int>(std::lround(spec.pre_event_min_s * scene.frame_rate));
    const int far = static_cast<int>(std::lround(spec.pre_event_max_s * scene.frame_rate));
    end_lo = std::max(start - far, first_visible + T - 1);
    end_hi = std::min(start - near, start - 1);
  } else {
    int last_visible = first_visible;
    while (last_visible + 1 < scene.frames && ped->present(last_visible + 1)) ++last_visible;
    end_lo = first_visible + T - 1;
    end_hi = last_visible;
  }
  end_hi = std::min(end_hi, scene.frames - 1);

  for (int end = end_lo; end <= end_hi; end += spec.stride) {
    const int first = end - T + 1;
    if (first < 0 || !present_throughout(*ped, first, end)) continue;
    out.push_back({&scene, ped->id, first, T, record.will_cross ? 1 : 0});
  }
  return out;
}

void validate_scene(const Scene& scene) {
  if (scene.frame_rate <= 0.0) throw DataError("frame rate must be positive");
  if (static_cast<int>(scene.timestamps.size()) != scene.frames) {
    throw DataError("scene '" + scene.name + "': timestamp count != frame count");
  }
  const double dt = 1.0 / scene.frame_rate;
  for (int t = 1; t < scene.frames; ++t) {
    if (std::abs(scene.timestamps[t] - scene.timestamps[t - 1] - dt) > 1e-6) {
      throw DataError("scene '" + scene.name + "': frame spacing violated at frame " +
                      std::to_string(t));
    }
  }
  auto check_user = [&](const RoadUser& u) {
    if (static_cast<int>(u.states.size()) != scene.frames) {
      throw DataError("user '" + u.id + "': state count != frame count");
    }
    for (const auto& s : u.states) {
      if (!s.present) continue;
      if (std::abs(s.orientation.norm() - 1.0) > 1e-6) {
        throw DataError("user '" + u.id + "': orientation not unit length");
      }
      if (!(s.length > 0.0) || !(s.width > 0.0)) {
        throw DataError("user '" + u.id + "': non-positive size");
      }
      if (!std::isfinite(s.location.x) || !std::isfinite(s.location.y)) {
        throw DataError("user '" + u.id + "': non-finite location");
      }
    }
  };
  for (const auto& u : scene.users) check_user(u);
  check_user(scene.ego);
}

}  // namespace graphsim
