#include "graphsim/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "graphsim/error.hpp"

namespace graphsim {

double ClusteringParams::speed_threshold(ObjectClass c) const {
  switch (c) {
    case ObjectClass::Pedestrian: return ped_speed_threshold;
    case ObjectClass::Vehicle:
    case ObjectClass::EgoVehicle: return vehicle_speed_threshold;
    case ObjectClass::Bicycle: return bicycle_speed_threshold;
  }
  throw ConfigError("no speed threshold for class");
}

double ClusteringParams::eps(ObjectClass c) const {
  switch (c) {
    case ObjectClass::Pedestrian: return ped_eps;
    case ObjectClass::Vehicle:
    case ObjectClass::EgoVehicle: return vehicle_eps;
    case ObjectClass::Bicycle: return bicycle_eps;
  }
  throw ConfigError("no DBSCAN radius for class");
}

void ClusteringParams::validate() const {
  const double vals[] = {ped_speed_threshold, vehicle_speed_threshold, bicycle_speed_threshold,
                         ped_eps,             vehicle_eps,             bicycle_eps,
                         opposite_angle_deg};
  for (double v : vals) {
    if (!(v > 0.0)) throw ConfigError("clustering thresholds must be positive");
  }
  if (min_pts < 1) throw ConfigError("clustering.min_pts must be >= 1");
  if (kmeans_max_iterations < 1) throw ConfigError("k-means iteration cap must be >= 1");
}

int ClusterSet::cluster_of(const std::string& id) const {
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& m = clusters[c].members;
    if (std::binary_search(m.begin(), m.end(), id)) return static_cast<int>(c);
  }
  return -1;
}

Motion classify_motion(double speed, ObjectClass cls, const ClusteringParams& params) {
  if (speed < 0.0) throw DataError("negative speed");
  return speed >= params.speed_threshold(cls) ? Motion::Moving : Motion::Stationary;
}

std::vector<int> dbscan(const std::vector<Vec2>& points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw ConfigError("dbscan: eps must be positive");
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  const std::size_t n = points.size();
  std::vector<int> label(n, kUnvisited);
  auto region = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q) {
      if (distance(points[p], points[q]) <= eps) out.push_back(q);
    }
    return out;
  };
  int next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (label[p] != kUnvisited) continue;
    auto seeds = region(p);
    if (static_cast<int>(seeds.size()) < min_pts) {
      label[p] = kNoise;
      continue;
    }
    const int c = next++;
    label[p] = c;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const std::size_t q = seeds[k];
      if (label[q] == kNoise) label[q] = c;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = c;
      auto more = region(q);
      if (static_cast<int>(more.size()) >= min_pts) {
        seeds.insert(seeds.end(), more.begin(), more.end());
      }
    }
  }
  return label;
}

Facing orientation_relation(Vec2 a, Vec2 b, double opposite_angle_deg) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DataError("orientation_relation: zero vector");
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  const double gamma = std::acos(c);
  const double threshold = opposite_angle_deg * std::numbers::pi / 180.0;
  return gamma >= threshold ? Facing::Opposite : Facing::Same;
}

Divergence divergence_relation(Vec2 current_i, Vec2 current_j, Vec2 previous_i,
                               Vec2 previous_j) {
  return distance(current_i, current_j) > distance(previous_i, previous_j) ? Divergence::Away
                                                                           : Divergence::Toward;
}

namespace {

const FrameObject& lookup(const std::vector<FrameObject>& objects, const std::string& id) {
  for (const auto& o : objects) {
    if (o.id == id) return o;
  }
  throw DataError("cluster member '" + id + "' missing from frame objects");
}

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<Cluster> split_by_root(const Cluster& cluster, DisjointSet& ds) {
  std::map<std::size_t, Cluster> groups;
  for (std::size_t i = 0; i < cluster.members.size(); ++i) {
    Cluster& g = groups[ds.find(i)];
    g.cls = cluster.cls;
    g.motion = cluster.motion;
    g.members.push_back(cluster.members[i]);
  }
  std::vector<Cluster> out;
  for (auto& [root, g] : groups) out.push_back(std::move(g));
  return out;
}

}  // namespace

std::vector<Cluster> refine_pedestrian_cluster(const Cluster& cluster,
                                               const std::vector<FrameObject>& objects,
                                               const ClusteringParams& params) {
  if (cluster.motion == Motion::Stationary || cluster.members.size() < 2) return {cluster};
  const std::size_t n = cluster.members.size();
  std::vector<const FrameObject*> obj(n);
  for (std::size_t i = 0; i < n; ++i) obj[i] = &lookup(objects, cluster.members[i]);
  DisjointSet ds(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const FrameObject& a = *obj[i];
      const FrameObject& b = *obj[j];
      bool keep = orientation_relation(a.orientation, b.orientation,
                                       params.opposite_angle_deg) == Facing::Same;
      if (!keep) {
        keep = !a.previous_location || !b.previous_location ||
               divergence_relation(a.location, b.location, *a.previous_location,
                                   *b.previous_location) == Divergence::Toward;
      }
      if (keep) ds.unite(i, j);
    }
  }
  return split_by_root(cluster, ds);
}

std::vector<Cluster> kmeans_orientation_split(const Cluster& cluster,
                                              const std::vector<FrameObject>& objects,
                                              int max_iterations) {
  const std::size_t n = cluster.members.size();
  if (n < 2) return {cluster};
  std::vector<Vec2> dir(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 o = lookup(objects, cluster.members[i]).orientation;
    const double norm = o.norm();
    if (norm == 0.0) throw DataError("k-means: zero orientation vector");
    dir[i] = (1.0 / norm) * o;
  }
  std::size_t seed_a = 0;
  std::size_t seed_b = 1;
  double widest = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(dir[i], dir[j]);
      if (d > widest) {
        widest = d;
        seed_a = i;
        seed_b = j;
      }
    }
  }
  if (widest <= 1e-6) return {cluster};

  Vec2 centre[2] = {dir[seed_a], dir[seed_b]};
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 d0 = dir[i] - centre[0];
      const Vec2 d1 = dir[i] - centre[1];
      const int a = d0.dot(d0) <= d1.dot(d1) ? 0 : 1;
      changed = changed || a != assign[i];
      assign[i] = a;
    }
    if (!changed) break;
    for (int k = 0; k < 2; ++k) {
      Vec2 sum;
      int count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] == k) {
          sum = sum + dir[i];
          ++count;
        }
      }
      if (count > 0) centre[k] = (1.0 / count) * sum;
    }
  }
  std::vector<Cluster> out;
  for (int k = 0; k < 2; ++k) {
    Cluster c{{}, cluster.cls, cluster.motion};
    for (std::size_t i = 0; i < n; ++i) {
      if (assign[i] == k) c.members.push_back(cluster.members[i]);
    }
    if (!c.members.empty()) out.push_back(std::move(c));
  }
  return out;
}

double object_speed(const FrameObject& o, double frame_rate, SpeedDefinition def) {
  if (!o.previous_location) return 0.0;
  const double disp = distance(o.location, *o.previous_location);
  return def == SpeedDefinition::DisplacementOverRate ? disp / frame_rate : disp * frame_rate;
}

void canonicalize(ClusterSet& set) {
  for (auto& c : set.clusters) std::sort(c.members.begin(), c.members.end());
  std::sort(set.clusters.begin(), set.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
}

ClusterSet cluster_objects(std::vector<FrameObject> objects, double frame_rate,
                           const ClusteringParams& params, int frame) {
  std::erase_if(objects, [](const FrameObject& o) { return o.cls == ObjectClass::EgoVehicle; });
  std::sort(objects.begin(), objects.end(),
            [](const FrameObject& a, const FrameObject& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < objects.size(); ++i) {
    if (objects[i].id == objects[i - 1].id) {
      throw DataError("duplicate object id '" + objects[i].id + "' in frame");
    }
  }
  ClusterSet out;
  out.frame = frame;
  if (!params.enabled) {
    for (const auto& o : objects) {
      const Motion m =
          classify_motion(object_speed(o, frame_rate, params.speed_definition), o.cls, params);
      out.clusters.push_back({{o.id}, o.cls, m});
    }
    canonicalize(out);
    return out;
  }

  // Six groups: class x motion. std::map keeps group order deterministic.
  std::map<std::pair<int, int>, std::vector<const FrameObject*>> groups;
  for (const auto& o : objects) {
    const Motion m =
        classify_motion(object_speed(o, frame_rate, params.speed_definition), o.cls, params);
    groups[{static_cast<int>(o.cls), static_cast<int>(m)}].push_back(&o);
  }
  for (const auto& [key, members] : groups) {
    const auto cls = static_cast<ObjectClass>(key.first);
    const auto motion = static_cast<Motion>(key.second);
    std::vector<Vec2> pts;
    for (const auto* o : members) pts.push_back(o->location);
    const std::vector<int> labels = dbscan(pts, params.eps(cls), params.min_pts);
    std::map<int, Cluster> coarse;
    for (std::size_t i = 0; i < members.size(); ++i) {
      // Noise points (min_pts > 1) become singletons.
      const int label = labels[i] >= 0 ? labels[i] : -1 - static_cast<int>(i);
      Cluster& c = coarse[label];
      c.cls = cls;
      c.motion = motion;
      c.members.push_back(members[i]->id);
    }
    for (auto& [label, c] : coarse) {
      std::vector<Cluster> refined;
      if (cls == ObjectClass::Pedestrian) {
        refined = params.pedestrian_orientation ? refine_pedestrian_cluster(c, objects, params)
                                                : std::vector<Cluster>{c};
      } else {
        refined = params.vehicle_orientation
                      ? kmeans_orientation_split(c, objects, params.kmeans_max_iterations)
                      : std::vector<Cluster>{c};
      }
      for (auto& r : refined) out.clusters.push_back(std::move(r));
    }
  }
  canonicalize(out);
  return out;
}

std::vector<FrameObject> frame_objects(const Scene& scene, int t, int sequence_start) {
  if (t < 0 || t >= scene.frames) throw DataError("frame index out of range");
  std::vector<FrameObject> out;
  for (const auto& u : scene.users) {
    if (!u.present(t)) continue;
    FrameObject o{u.id, u.cls, u.states[t].location, u.states[t].orientation, std::nullopt};
    if (t > sequence_start && u.present(t - 1)) o.previous_location = u.states[t - 1].location;
    out.push_back(std::move(o));
  }
  return out;
}

ClusterSet cluster_frame(const Scene& scene, int t, const ClusteringParams& params,
                         int sequence_start) {
  return cluster_objects(frame_objects(scene, t, sequence_start), scene.frame_rate, params, t);
}

}  // namespace graphsim
