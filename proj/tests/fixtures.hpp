#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "graphsim/clustering.hpp"
#include "graphsim/graph_builder.hpp"
#include "graphsim/scene.hpp"

namespace fixtures {

using graphsim::ObjectClass;
using graphsim::RoadUser;
using graphsim::Scene;
using graphsim::Vec2;

inline Scene empty_scene(int frames, double rate = 10.0) {
  Scene s;
  s.name = "fixture";
  s.frame_rate = rate;
  s.frames = frames;
  for (int t = 0; t < frames; ++t) s.timestamps.push_back(t / rate);
  s.ego.id = "ego";
  s.ego.cls = ObjectClass::EgoVehicle;
  s.ego.states.resize(frames);
  for (int t = 0; t < frames; ++t) {
    auto& st = s.ego.states[t];
    st.location = {-30.0 + t, -1.75};
    st.length = 4.5;
    st.width = 1.9;
    st.timestamp = s.timestamps[t];
    st.present = true;
  }
  return s;
}

// Present on frames [first, last], positions from a function of the frame.
template <class F>
RoadUser make_user(const Scene& s, std::string id, ObjectClass cls, F&& at, int first = 0,
                   int last = -1, Vec2 heading = {1.0, 0.0}) {
  if (last < 0) last = s.frames - 1;
  RoadUser u;
  u.id = std::move(id);
  u.cls = cls;
  u.states.resize(s.frames);
  for (int t = first; t <= last; ++t) {
    auto& st = u.states[t];
    st.location = at(t);
    st.orientation = heading;
    st.length = cls == ObjectClass::Pedestrian ? 0.6 : 4.5;
    st.width = cls == ObjectClass::Pedestrian ? 0.6 : 1.9;
    st.timestamp = s.timestamps[t];
    st.present = true;
  }
  return u;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

// Random frame of up to max_objects users packed into a small area so that
// the DBSCAN radii, speed thresholds and the 90 degree rule all get hit.
// Some objects have no history.
inline std::vector<graphsim::FrameObject> random_frame(std::mt19937_64& rng, int max_objects = 30) {
  using graphsim::FrameObject;
  const int n = static_cast<int>(rng() % (max_objects + 1));
  std::vector<FrameObject> out;
  const double extent = uniform(rng, 3.0, 40.0);
  for (int i = 0; i < n; ++i) {
    FrameObject o;
    char buf[16];
    std::snprintf(buf, sizeof buf, "u%03d", i);
    o.id = buf;
    const int c = static_cast<int>(rng() % 4);
    o.cls = c < 2 ? ObjectClass::Pedestrian : c == 2 ? ObjectClass::Vehicle : ObjectClass::Bicycle;
    o.location = {uniform(rng, 0, extent), uniform(rng, 0, extent)};
    // Quantised headings make exact 90/180 degree pairs common.
    const double heading = rng() % 2 ? (rng() % 8) * 0.78539816339744831 : uniform(rng, -3.2, 3.2);
    o.orientation = {std::cos(heading), std::sin(heading)};
    if (rng() % 5 != 0) {
      // At 10 Hz the displacement straddles every class threshold under both
      // speed definitions.
      const double top = o.cls == ObjectClass::Pedestrian ? 4.0 : 40.0;
      const double step = rng() % 2 ? uniform(rng, 0.0, top) : uniform(rng, 0.0, top / 100.0);
      const double back = uniform(rng, -3.2, 3.2);
      o.previous_location = Vec2{o.location.x + step * std::cos(back), o.location.y + step * std::sin(back)};
    }
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<std::vector<std::string>> partition(const graphsim::ClusterSet& set) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : set.clusters) out.push_back(c.members);
  return out;
}

// Target pedestrian "a000" at index 0 near the road, random other users,
// clustered with default parameters; absent users are left out of clustering.
inline graphsim::FrameGraphInput random_graph_frame(std::mt19937_64& rng) {
  using namespace graphsim;
  auto objs = random_frame(rng, 20);
  FrameObject target{"a000", ObjectClass::Pedestrian,
                     {uniform(rng, -30, 30), uniform(rng, -8, 8)}, {0.0, 1.0}, std::nullopt};
  std::vector<bool> present{true};
  std::vector<FrameObject> here{target};
  for (auto& o : objs) {
    o.location = {o.location.x - 20.0 + target.location.x * 0.2, o.location.y - 20.0};
    if (o.previous_location) o.previous_location = Vec2{o.previous_location->x - 20.0 + target.location.x * 0.2,
                                                        o.previous_location->y - 20.0};
    present.push_back(rng() % 6 != 0);
    if (present.back()) here.push_back(o);
  }
  const ClusterSet set = cluster_objects(here, 10.0, ClusteringParams{});
  FrameGraphInput in;
  in.locations.push_back(target.location);
  in.cluster.push_back(set.cluster_of(target.id));
  in.present.push_back(true);
  for (std::size_t i = 0; i < objs.size(); ++i) {
    in.present.push_back(present[i + 1]);
    in.locations.push_back(present[i + 1] ? objs[i].location : Vec2{});
    in.cluster.push_back(present[i + 1] ? set.cluster_of(objs[i].id) : -1);
  }
  return in;
}

// Counts violations of the adjacency invariants for one frame.
inline int adjacency_violations(const graphsim::FrameGraphInput& in, const graphsim::Tensor& B,
                                const graphsim::Tensor& D, const graphsim::Tensor& A) {
  const std::size_t n = in.locations.size();
  int bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = A.at(i, j);
      const bool together = in.present[i] && in.present[j] && in.cluster[i] >= 0 && in.cluster[i] == in.cluster[j];
      bad += a != A.at(j, i);
      bad += !(a >= 0.0 && a <= 1.0);
      if (i == j) {
        bad += a != 1.0;
      } else if (together) {
        bad += a != 1.0;
      } else if (i != 0 && j != 0) {
        bad += a != 0.0;
      } else {
        bad += a != (1.0 - B.at(i, j)) * (1.0 - D.at(i, j));
        bad += a == 1.0;
        if (!in.present[i] || !in.present[j]) bad += a != 0.0;
      }
    }
  }
  return bad;
}

}  // namespace fixtures
