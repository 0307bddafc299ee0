#include "graphsim/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <map>
#include <numbers>

#include "graphsim/error.hpp"

namespace graphsim {

void ScenarioSpec::validate() const {
  if (frames <= 0) throw ConfigError("scenario needs at least one frame");
  if (!(frame_rate > 0.0)) throw ConfigError("scenario frame rate must be positive");
  if (crossers < 0 || walkers < 0 || standers < 0 || moving_vehicles < 0 || parked_vehicles < 0 ||
      bicycles < 0) {
    throw ConfigError("scenario counts must be >= 0");
  }
  if (velocity_noise < 0.0) throw ConfigError("velocity noise must be >= 0");
  if (non_crosser_visible < 0 || non_crosser_visible > frames) {
    throw ConfigError("non_crosser_visible must be within [0, frames]");
  }
}

double SyntheticRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SyntheticRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SyntheticRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

LaneGraph make_lane_graph(LaneTemplate layout) {
  const double h = kLaneWidth / 2.0;
  const double L = kRoadHalfLength;
  LaneGraph g;
  g.lanes.push_back({{{-L, -h}, {L, -h}}});  // eastbound, ego lane
  g.lanes.push_back({{{L, h}, {-L, h}}});    // westbound
  g.drivable_polygons.push_back({{-L, -kLaneWidth}, {L, -kLaneWidth}, {L, kLaneWidth}, {-L, kLaneWidth}});
  if (layout == LaneTemplate::TJunction) {
    g.lanes.push_back({{{-h, L}, {-h, kLaneWidth}}});  // southbound into the junction
    g.lanes.push_back({{{h, kLaneWidth}, {h, L}}});
    g.drivable_polygons.push_back(
        {{-kLaneWidth, kLaneWidth}, {kLaneWidth, kLaneWidth}, {kLaneWidth, L}, {-kLaneWidth, L}});
  }
  return g;
}

namespace {

struct Body {
  double length;
  double width;
};

Body body_for(ObjectClass cls, SyntheticRng& rng) {
  switch (cls) {
    case ObjectClass::Pedestrian: return {rng.uniform(0.5, 0.8), rng.uniform(0.5, 0.8)};
    case ObjectClass::Bicycle: return {rng.uniform(1.6, 1.9), rng.uniform(0.5, 0.7)};
    default: return {rng.uniform(4.2, 4.9), rng.uniform(1.8, 2.0)};
  }
}

std::string make_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
  return buf;
}

Vec2 unit(Vec2 v, Vec2 fallback) {
  const double n = v.norm();
  return n > 1e-12 ? (1.0 / n) * v : fallback;
}

// Integrates per-frame velocities from an initial location. Heading follows
// the velocity and keeps the previous value while standing.
RoadUser integrate(const std::string& id, ObjectClass cls, Vec2 start, Vec2 heading,
                   const std::vector<Vec2>& velocity, Body body, const Scene& scene,
                   int first_visible, int last_visible) {
  RoadUser u;
  u.id = id;
  u.cls = cls;
  u.states.resize(static_cast<std::size_t>(scene.frames));
  Vec2 loc = start;
  Vec2 dir = unit(heading, {1.0, 0.0});
  for (int t = 0; t < scene.frames; ++t) {
    if (t > 0) loc = loc + (1.0 / scene.frame_rate) * velocity[t - 1];
    if (velocity[t].norm() > 1e-9) dir = unit(velocity[t], dir);
    if (t < first_visible || t > last_visible) continue;
    FrameState& s = u.states[t];
    s.location = loc;
    s.orientation = dir;
    s.length = body.length;
    s.width = body.width;
    s.timestamp = scene.timestamps[t];
    s.present = true;
  }
  return u;
}

std::optional<int> first_drivable_frame(const RoadUser& u, const LaneGraph& lanes, int from = 0) {
  for (int t = from; t < static_cast<int>(u.states.size()); ++t) {
    if (u.present(t) && lanes.is_drivable(u.states[t].location)) return t;
  }
  return std::nullopt;
}

std::optional<int> first_off_road_frame(const RoadUser& u, const LaneGraph& lanes, int from) {
  for (int t = from; t < static_cast<int>(u.states.size()); ++t) {
    if (u.present(t) && !lanes.is_drivable(u.states[t].location)) return t;
  }
  return std::nullopt;
}

Scene empty_scene(const ScenarioSpec& spec) {
  Scene scene;
  scene.name = spec.name;
  scene.frame_rate = spec.frame_rate;
  scene.frames = spec.frames;
  for (int t = 0; t < spec.frames; ++t) scene.timestamps.push_back(t / spec.frame_rate);
  scene.lanes = make_lane_graph(spec.layout);
  return scene;
}

// Pedestrian x positions stay clear of the side road of a T-junction.
double sidewalk_x(SyntheticRng& rng, LaneTemplate layout) {
  if (layout == LaneTemplate::StraightRoad) return rng.uniform(-35.0, 35.0);
  const double mag = rng.uniform(8.0, 35.0);
  return rng.uniform() < 0.5 ? -mag : mag;
}

void add_ego(Scene& scene, SyntheticRng& rng) {
  const double speed = rng.uniform(4.0, 9.0);
  const Vec2 start{rng.uniform(-45.0, -5.0), -kLaneWidth / 2.0};
  std::vector<Vec2> vel(static_cast<std::size_t>(scene.frames), Vec2{speed, 0.0});
  scene.ego = integrate("ego", ObjectClass::EgoVehicle, start, {1.0, 0.0}, vel,
                        {4.6, 1.9}, scene, 0, scene.frames - 1);
}

}  // namespace

LoadedScene generate_scene(const ScenarioSpec& spec) {
  spec.validate();
  SyntheticRng rng(spec.seed);
  LoadedScene out;
  Scene& scene = out.scene;
  scene = empty_scene(spec);
  add_ego(scene, rng);
  const int F = spec.frames;
  const double rate = spec.frame_rate;
  int ped = 0;

  auto side = [&]() { return spec.north_side_only || rng.uniform() < 0.5 ? 1.0 : -1.0; };
  auto jitter = [&](Vec2 v) {
    if (spec.velocity_noise == 0.0) return v;
    return v + Vec2{spec.velocity_noise * rng.normal(), spec.velocity_noise * rng.normal()};
  };

  for (int i = 0; i < spec.crossers; ++i) {
    const double s = side();
    const double x0 = sidewalk_x(rng, spec.layout);
    const double approach = rng.uniform(0.8, 1.5);
    const double stroll = rng.uniform(0.8, 1.4) * (x0 < 0 ? -1.0 : 1.0);
    // Walk along the sidewalk, turn toward the road, then cross it.
    const int entry = std::clamp(F / 2 + static_cast<int>(rng.uniform(-5.0, 5.0)), 1, F);
    const int turn = std::max(0, entry - 28 - static_cast<int>(rng.uniform(0.0, 5.0)));
    const double y0 = s * (kLaneWidth + approach * (entry - turn) / rate - 0.02);
    std::vector<Vec2> vel(static_cast<std::size_t>(F));
    for (int t = 0; t < F; ++t) {
      vel[t] = t < turn ? jitter({stroll, 0.0}) : Vec2{0.0, -s * approach};
    }
    const Body body = body_for(ObjectClass::Pedestrian, rng);
    RoadUser u = integrate(make_id("ped", ped++), ObjectClass::Pedestrian, {x0, y0},
                           vel[0], vel, body, scene, 0, F - 1);
    BehaviourRecord rec{u.id, true, std::nullopt, std::nullopt};
    rec.crossing_start_frame = first_drivable_frame(u, scene.lanes);
    if (!rec.crossing_start_frame) {
      // The scene ended before the crosser reached the road.
      rec.will_cross = false;
    } else {
      rec.crossing_end_frame = first_off_road_frame(u, scene.lanes, *rec.crossing_start_frame);
    }
    out.behaviours.push_back(rec);
    scene.users.push_back(std::move(u));
  }

  auto visible_run = [&](int& first, int& last) {
    first = 0;
    last = F - 1;
    if (spec.non_crosser_visible > 0) {
      first = static_cast<int>(rng.uniform(0.0, static_cast<double>(F - spec.non_crosser_visible + 1)));
      last = first + spec.non_crosser_visible - 1;
    }
  };

  for (int i = 0; i < spec.walkers; ++i) {
    const double s = side();
    const double x0 = sidewalk_x(rng, spec.layout);
    const double y0 = s * (kLaneWidth + rng.uniform(1.0, 4.0));
    const double speed = rng.uniform(0.8, 1.5) * (x0 < 0 ? -1.0 : 1.0);
    std::vector<Vec2> vel(static_cast<std::size_t>(F));
    for (int t = 0; t < F; ++t) vel[t] = jitter({speed, 0.0});
    // Parallel walking must never drift onto the road.
    for (int t = 0; t < F; ++t) vel[t].y = 0.0;
    int first, last;
    visible_run(first, last);
    const Body body = body_for(ObjectClass::Pedestrian, rng);
    RoadUser u = integrate(make_id("ped", ped++), ObjectClass::Pedestrian, {x0, y0}, vel[0],
                           vel, body, scene, first, last);
    out.behaviours.push_back({u.id, false, std::nullopt, std::nullopt});
    scene.users.push_back(std::move(u));
  }

  for (int i = 0; i < spec.standers; ++i) {
    const double s = side();
    const Vec2 start{sidewalk_x(rng, spec.layout), s * (kLaneWidth + rng.uniform(0.3, 3.0))};
    std::vector<Vec2> vel(static_cast<std::size_t>(F), Vec2{});
    int first, last;
    visible_run(first, last);
    const Body body = body_for(ObjectClass::Pedestrian, rng);
    RoadUser u = integrate(make_id("ped", ped++), ObjectClass::Pedestrian, start, {0.0, -s},
                           vel, body, scene, first, last);
    out.behaviours.push_back({u.id, false, std::nullopt, std::nullopt});
    scene.users.push_back(std::move(u));
  }

  for (int i = 0; i < spec.moving_vehicles; ++i) {
    const bool west = rng.uniform() < 0.5;
    const double speed = rng.uniform(6.0, 12.0);
    const Vec2 start{rng.uniform(-45.0, 45.0), west ? kLaneWidth / 2.0 : -kLaneWidth / 2.0};
    std::vector<Vec2> vel(static_cast<std::size_t>(F), Vec2{west ? -speed : speed, 0.0});
    const Body body = body_for(ObjectClass::Vehicle, rng);
    scene.users.push_back(integrate(make_id("veh", i), ObjectClass::Vehicle, start, vel[0], vel,
                                    body, scene, 0, F - 1));
  }
  for (int i = 0; i < spec.parked_vehicles; ++i) {
    const bool west = rng.uniform() < 0.5;
    const Vec2 start{rng.uniform(-45.0, 45.0), west ? kLaneWidth / 2.0 : -kLaneWidth / 2.0};
    std::vector<Vec2> vel(static_cast<std::size_t>(F), Vec2{});
    const Body body = body_for(ObjectClass::Vehicle, rng);
    scene.users.push_back(integrate(make_id("veh", spec.moving_vehicles + i), ObjectClass::Vehicle,
                                    start, {west ? -1.0 : 1.0, 0.0}, vel, body, scene, 0, F - 1));
  }
  for (int i = 0; i < spec.bicycles; ++i) {
    const bool west = rng.uniform() < 0.5;
    const double speed = rng.uniform(3.0, 6.0);
    const Vec2 start{rng.uniform(-40.0, 40.0), west ? 3.0 : -3.0};
    std::vector<Vec2> vel(static_cast<std::size_t>(F), Vec2{west ? -speed : speed, 0.0});
    const Body body = body_for(ObjectClass::Bicycle, rng);
    scene.users.push_back(integrate(make_id("bike", i), ObjectClass::Bicycle, start, vel[0], vel,
                                    body, scene, 0, F - 1));
  }
  validate_scene(scene);
  return out;
}

std::vector<LoadedScene> separable_dataset(int n_pedestrians, std::uint64_t seed,
                                           double positive_fraction) {
  if (n_pedestrians < 20) throw ConfigError("separable dataset needs at least 20 pedestrians");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
    throw ConfigError("positive fraction must be in (0, 1)");
  }
  int crossers = static_cast<int>(std::lround(positive_fraction * n_pedestrians));
  int walkers = n_pedestrians - crossers;
  std::vector<LoadedScene> out;
  SyntheticRng seeds(seed);
  for (int k = 0; crossers > 0 || walkers > 0; ++k) {
    ScenarioSpec spec;
    spec.seed = seeds.bits();
    spec.name = make_id("separable", k);
    spec.crossers = std::min(crossers, 2);
    spec.walkers = std::min(walkers, 2);
    spec.standers = 0;
    spec.moving_vehicles = 2;
    spec.non_crosser_visible = 20;
    spec.north_side_only = true;
    crossers -= spec.crossers;
    walkers -= spec.walkers;
    out.push_back(generate_scene(spec));
  }
  return out;
}

std::vector<LoadedScene> directional_group_dataset(int n_pedestrians, std::uint64_t seed) {
  if (n_pedestrians < 4) throw ConfigError("directional-group dataset needs at least 4 pedestrians");
  std::vector<LoadedScene> out;
  SyntheticRng rng(seed);
  constexpr int kFrames = 60;
  for (int k = 0; k < n_pedestrians; ++k) {
    const bool crosser = k % 2 == 1;
    ScenarioSpec spec;
    spec.name = make_id("directional", k);
    spec.frames = kFrames;
    spec.crossers = spec.walkers = spec.standers = spec.moving_vehicles = 0;
    LoadedScene ls;
    Scene& scene = ls.scene;
    scene = empty_scene(spec);
    add_ego(scene, rng);

    const double xp = rng.uniform(-25.0, 25.0);
    const double yp = kLaneWidth + rng.uniform(0.3, 0.6);
    // Crossing starts around the same frames the non-crossers are seen, so
    // frame timing carries no label information.
    const int entry = 36 + static_cast<int>(rng.uniform(0.0, 9.0));
    const double walk = 1.2;
    std::vector<Vec2> vel(kFrames, Vec2{});
    int first = 0, last = kFrames - 1;
    if (crosser) {
      const int steps = static_cast<int>(std::ceil((yp - kLaneWidth) * spec.frame_rate / walk));
      for (int t = std::max(0, entry - steps - 1); t < kFrames; ++t) vel[t] = {0.0, -walk};
    } else {
      first = entry - 26;
      last = entry - 9;
    }
    const Body body = body_for(ObjectClass::Pedestrian, rng);
    RoadUser target = integrate("ped_000", ObjectClass::Pedestrian, {xp, yp}, {0.0, -1.0}, vel,
                                body, scene, first, last);
    BehaviourRecord rec{target.id, crosser, std::nullopt, std::nullopt};
    if (crosser) rec.crossing_start_frame = first_drivable_frame(target, scene.lanes);
    ls.behaviours.push_back(rec);
    scene.users.push_back(std::move(target));

    // Westbound lane: upstream is +x.
    const double offset = rng.uniform(4.0, 10.0);
    const double dir = crosser ? -1.0 : 1.0;
    for (int v = 0; v < 3; ++v) {
      const Vec2 at{xp + dir * (offset + 6.0 * v), kLaneWidth / 2.0};
      const std::vector<Vec2> still(kFrames, Vec2{});
      scene.users.push_back(integrate(make_id("veh", v), ObjectClass::Vehicle, at, {-1.0, 0.0},
                                      still, body_for(ObjectClass::Vehicle, rng), scene, 0,
                                      kFrames - 1));
    }
    validate_scene(scene);
    out.push_back(std::move(ls));
  }
  return out;
}

ApproachFeatures approach_features(const Scene& scene, const ObservationWindow& window) {
  const RoadUser* u = scene.find_user(window.target_id);
  if (u == nullptr) throw DataError("unknown target '" + window.target_id + "'");
  ApproachFeatures f;
  const int a = window.first_frame;
  const int b = window.last_frame();
  const Vec2 pa = u->states[a].location;
  const Vec2 pb = u->states[b].location;
  if (b > a) {
    f.approach_speed = (std::abs(pa.y) - std::abs(pb.y)) * scene.frame_rate / (b - a);
  }
  const Vec2 to_road{0.0, pb.y > 0 ? -1.0 : 1.0};
  const Vec2 heading = u->states[b].orientation;
  f.heading_angle = std::acos(std::clamp(heading.dot(to_road) / heading.norm(), -1.0, 1.0));
  return f;
}

namespace {

std::vector<std::vector<std::size_t>> components(std::size_t n,
                                                 const std::vector<std::vector<bool>>& linked) {
  std::vector<int> seen(n, 0);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp{s};
    seen[s] = 1;
    for (std::size_t k = 0; k < comp.size(); ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!seen[j] && linked[comp[k]][j]) {
          seen[j] = 1;
          comp.push_back(j);
        }
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<std::vector<std::size_t>> naive_two_means(const std::vector<Vec2>& raw) {
  const std::size_t n = raw.size();
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (n < 2) return {all};
  std::vector<Vec2> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double len = std::hypot(raw[i].x, raw[i].y);
    d[i] = {raw[i].x / len, raw[i].y / len};
  }
  auto sq = [](Vec2 a, Vec2 b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); };
  std::size_t p = 0, q = 1;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = std::sqrt(sq(d[i], d[j]));
      if (dist > best) {
        best = dist;
        p = i;
        q = j;
      }
    }
  }
  if (best <= 1e-6) return {all};
  Vec2 c0 = d[p], c1 = d[q];
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = sq(d[i], c0) <= sq(d[i], c1) ? 0 : 1;
    if (next == assign) break;
    assign = next;
    Vec2 s0, s1;
    int n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assign[i] == 0) {
        s0 = s0 + d[i];
        ++n0;
      } else {
        s1 = s1 + d[i];
        ++n1;
      }
    }
    if (n0 > 0) c0 = (1.0 / n0) * s0;
    if (n1 > 0) c1 = (1.0 / n1) * s1;
  }
  std::vector<std::vector<std::size_t>> out(2);
  for (std::size_t i = 0; i < n; ++i) out[assign[i]].push_back(i);
  std::erase_if(out, [](const auto& g) { return g.empty(); });
  return out;
}

}  // namespace

std::vector<std::vector<std::string>> brute_force_cluster_oracle(
    const std::vector<FrameObject>& objects, double frame_rate, const ClusteringParams& params) {
  if (params.min_pts != 1) throw ConfigError("cluster oracle supports min_pts = 1 only");
  std::vector<const FrameObject*> obj;
  for (const auto& o : objects) {
    if (o.cls != ObjectClass::EgoVehicle) obj.push_back(&o);
  }
  std::sort(obj.begin(), obj.end(), [](const FrameObject* a, const FrameObject* b) { return a->id < b->id; });
  const std::size_t n = obj.size();
  std::vector<bool> moving(n);
  for (std::size_t i = 0; i < n; ++i) {
    double speed = 0.0;
    if (obj[i]->previous_location) {
      const Vec2 dl = obj[i]->location - *obj[i]->previous_location;
      const double disp = std::hypot(dl.x, dl.y);
      speed = params.speed_definition == SpeedDefinition::DisplacementOverRate ? disp / frame_rate
                                                                       : disp * frame_rate;
    }
    moving[i] = speed >= params.speed_threshold(obj[i]->cls);
  }

  std::vector<std::vector<std::size_t>> parts;
  if (!params.enabled) {
    for (std::size_t i = 0; i < n; ++i) parts.push_back({i});
  } else {
    // Proximity links only inside a class x motion group.
    std::vector<std::vector<bool>> near(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (obj[i]->cls != obj[j]->cls || moving[i] != moving[j]) continue;
        const Vec2 dl = obj[i]->location - obj[j]->location;
        near[i][j] = std::hypot(dl.x, dl.y) <= params.eps(obj[i]->cls);
      }
    }
    for (const auto& coarse : components(n, near)) {
      const std::size_t m = coarse.size();
      const ObjectClass cls = obj[coarse[0]]->cls;
      std::vector<std::vector<std::size_t>> local;
      if (cls == ObjectClass::Pedestrian && moving[coarse[0]] && params.pedestrian_orientation) {
        std::vector<std::vector<bool>> keep(m, std::vector<bool>(m, false));
        for (std::size_t a = 0; a < m; ++a) {
          for (std::size_t b = 0; b < m; ++b) {
            const FrameObject& p = *obj[coarse[a]];
            const FrameObject& q = *obj[coarse[b]];
            const double cosine = (p.orientation.x * q.orientation.x + p.orientation.y * q.orientation.y) /
                                  (std::hypot(p.orientation.x, p.orientation.y) *
                                   std::hypot(q.orientation.x, q.orientation.y));
            const bool same = std::acos(std::clamp(cosine, -1.0, 1.0)) <
                              params.opposite_angle_deg * std::numbers::pi / 180.0;
            bool toward = true;
            if (p.previous_location && q.previous_location) {
              const Vec2 now = p.location - q.location;
              const Vec2 before = *p.previous_location - *q.previous_location;
              toward = !(std::hypot(now.x, now.y) > std::hypot(before.x, before.y));
            }
            keep[a][b] = a == b || same || toward;
          }
        }
        local = components(m, keep);
      } else if (cls != ObjectClass::Pedestrian && params.vehicle_orientation) {
        std::vector<Vec2> dirs;
        for (std::size_t idx : coarse) dirs.push_back(obj[idx]->orientation);
        local = naive_two_means(dirs);
      } else {
        std::vector<std::size_t> all(m);
        for (std::size_t a = 0; a < m; ++a) all[a] = a;
        local = {all};
      }
      for (const auto& g : local) {
        std::vector<std::size_t> part;
        for (std::size_t a : g) part.push_back(coarse[a]);
        parts.push_back(part);
      }
    }
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& p : parts) {
    std::vector<std::string> ids;
    for (std::size_t i : p) ids.push_back(obj[i]->id);
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace graphsim
