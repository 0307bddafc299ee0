#include "graphsim/graph_builder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "graphsim/error.hpp"

namespace graphsim {

double normalize_distance(double d, double d_thresh) {
  return std::min(d, d_thresh) / d_thresh;
}

NodeRole role_for(ObjectClass cls, bool is_target) {
  if (is_target) return NodeRole::TargetPedestrian;
  switch (cls) {
    case ObjectClass::Pedestrian: return NodeRole::OtherPedestrian;
    case ObjectClass::Vehicle: return NodeRole::Vehicle;
    case ObjectClass::Bicycle: return NodeRole::Bicycle;
    case ObjectClass::EgoVehicle: return NodeRole::Ego;
  }
  return NodeRole::OtherPedestrian;
}

namespace {

ObjectClass class_for(NodeRole role) {
  switch (role) {
    case NodeRole::TargetPedestrian:
    case NodeRole::OtherPedestrian: return ObjectClass::Pedestrian;
    case NodeRole::Ego: return ObjectClass::EgoVehicle;
    case NodeRole::Vehicle: return ObjectClass::Vehicle;
    case NodeRole::Bicycle: return ObjectClass::Bicycle;
  }
  return ObjectClass::Pedestrian;
}

double rel_coord(double offset, double d_thresh, bool keep_sign) {
  const double mag = normalize_distance(std::abs(offset), d_thresh);
  return keep_sign && offset < 0.0 ? -mag : mag;
}

}  // namespace

FeatureVector encode_node(const NodeSnapshot& node, Vec2 target_location,
                          const NormalizationManifest& manifest, const GraphOptions& options) {
  if (!manifest.fitted) throw ComputeError("encode_node: normalization manifest not fitted");
  FeatureVector v{};
  const std::size_t base = static_cast<std::size_t>(node.role) * kSectionSize;
  const Vec2 offset = node.role == NodeRole::TargetPedestrian ? Vec2{} : node.location - target_location;
  v[base + 2] = rel_coord(offset.x, manifest.d_thresh, options.signed_rel_coords);
  v[base + 3] = rel_coord(offset.y, manifest.d_thresh, options.signed_rel_coords);
  if (options.node_features == NodeFeatures::LocationsOnly) return v;
  const Motion m = classify_motion(node.speed, class_for(node.role), options.clustering);
  v[base + 0] = m == Motion::Stationary ? 1.0 : 0.0;
  v[base + 1] = m == Motion::Moving ? 1.0 : 0.0;
  v[base + 4] = node.speed / manifest.max_speed;
  v[base + 5] = node.length / manifest.max_length;
  v[base + 6] = node.width / manifest.max_width;
  return v;
}

namespace {

struct Projection {
  double distance = std::numeric_limits<double>::infinity();
  double arc_length = 0.0;
};

Projection project(Vec2 p, const Polyline& line) {
  Projection best;
  double walked = 0.0;
  for (std::size_t i = 0; i + 1 < line.vertices.size(); ++i) {
    const Vec2 a = line.vertices[i];
    const Vec2 ab = line.vertices[i + 1] - a;
    const double len2 = ab.dot(ab);
    const double u = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    const Vec2 foot = a + u * ab;
    const double d = distance(p, foot);
    const double len = std::sqrt(len2);
    if (d < best.distance) best = {d, walked + u * len};
    walked += len;
  }
  return best;
}

}  // namespace

std::optional<double> lane_signed_distance(Vec2 object, Vec2 pedestrian, const LaneGraph& lanes) {
  if (!lanes.is_drivable(object)) return std::nullopt;
  if (lanes.lanes.empty()) {
    throw DataError("lane distance requested for drivable object but the map has no lanes");
  }
  std::size_t nearest = 0;
  Projection ped_proj = project(pedestrian, lanes.lanes[0]);
  for (std::size_t i = 1; i < lanes.lanes.size(); ++i) {
    const Projection p = project(pedestrian, lanes.lanes[i]);
    if (p.distance < ped_proj.distance) {
      ped_proj = p;
      nearest = i;
    }
  }
  const Projection obj_proj = project(object, lanes.lanes[nearest]);
  return ped_proj.arc_length - obj_proj.arc_length;
}

namespace {

bool same_cluster(const FrameGraphInput& f, std::size_t i, std::size_t j) {
  return f.cluster[i] >= 0 && f.cluster[i] == f.cluster[j];
}

void check_frame(const FrameGraphInput& f) {
  const std::size_t n = f.locations.size();
  if (n == 0 || f.cluster.size() != n || f.present.size() != n) {
    throw ComputeError("frame graph input has inconsistent sizes");
  }
  if (!f.present[0]) throw DataError("target pedestrian absent from frame");
}

// Shared layout for B and D: row 0 from star_value, same-cluster 0, diag 0,
// everything else (including absent nodes) 1.
template <typename StarValue>
Tensor factor_matrix(const FrameGraphInput& f, StarValue star_value) {
  check_frame(f);
  const std::size_t n = f.locations.size();
  Tensor M({n, n}, 1.0);
  for (std::size_t i = 1; i < n; ++i) {
    if (!f.present[i]) continue;
    M.at(0, i) = M.at(i, 0) = star_value(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (f.present[i] && f.present[j] && same_cluster(f, i, j)) M.at(i, j) = M.at(j, i) = 0.0;
    }
    M.at(i, i) = 0.0;
  }
  return M;
}

}  // namespace

Tensor build_B(const FrameGraphInput& frame, const LaneGraph& lanes, double d_thresh) {
  return factor_matrix(frame, [&](std::size_t i) {
    const auto d = lane_signed_distance(frame.locations[i], frame.locations[0], lanes);
    if (!d) return 0.5;
    return (std::min(std::max(*d, -d_thresh), d_thresh) + d_thresh) / (2.0 * d_thresh);
  });
}

Tensor build_D(const FrameGraphInput& frame, double d_thresh) {
  return factor_matrix(frame, [&](std::size_t i) {
    return normalize_distance(distance(frame.locations[0], frame.locations[i]), d_thresh);
  });
}

Tensor build_A(const Tensor& B, const Tensor& D) {
  if (B.shape() != D.shape() || B.rank() != 2 || B.dim(0) != B.dim(1)) {
    throw ComputeError("build_A: B " + B.shape_string() + " and D " + D.shape_string() +
                       " must be equal square matrices");
  }
  Tensor A(B.shape());
  for (std::size_t k = 0; k < A.size(); ++k) A[k] = (1.0 - B[k]) * (1.0 - D[k]);
  return A;
}

Tensor build_inverse_distance_A(const FrameGraphInput& frame) {
  check_frame(frame);
  const std::size_t n = frame.locations.size();
  Tensor A({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) A.at(i, i) = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (!frame.present[i]) continue;
    const double d = distance(frame.locations[0], frame.locations[i]);
    A.at(0, i) = A.at(i, 0) = d < 1.0 ? 1.0 : 1.0 / d;
  }
  return A;
}

Tensor normalize_adjacency(const Tensor& A, AdjacencyNormalization mode) {
  if (mode == AdjacencyNormalization::None) return A;
  const std::size_t n = A.dim(0);
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += A.at(i, j);
    inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Tensor out(A.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = inv_sqrt[i] * A.at(i, j) * inv_sqrt[j];
  }
  return out;
}

Tensor GraphTensors::frame_adjacency(std::size_t t) const {
  const std::size_t n = nodes();
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = A.at(i, j, t);
  }
  return out;
}

Tensor GraphTensors::frame_features(std::size_t t) const {
  const std::size_t n = nodes();
  const std::size_t q = V.dim(1);
  Tensor out({n, q});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < q; ++c) out.at(i, c) = V.at(i, c, t);
  }
  return out;
}

double sequence_speed(const RoadUser& user, int t, int sequence_start, double frame_rate,
                      SpeedDefinition def) {
  if (t <= sequence_start || !user.present(t - 1)) return 0.0;
  return compute_speed(user, t, frame_rate, def);
}

namespace {

std::vector<const RoadUser*> window_nodes(const Scene& scene, const ObservationWindow& w) {
  const RoadUser* target = scene.find_user(w.target_id);
  if (target == nullptr || target->cls != ObjectClass::Pedestrian) {
    throw DataError("window target '" + w.target_id + "' is not a pedestrian of the scene");
  }
  auto seen = [&](const RoadUser& u) {
    for (int t = w.first_frame; t <= w.last_frame(); ++t) {
      if (u.present(t)) return true;
    }
    return false;
  };
  std::vector<const RoadUser*> nodes{target};
  if (seen(scene.ego)) nodes.push_back(&scene.ego);
  std::vector<const RoadUser*> others;
  for (const auto& u : scene.users) {
    if (u.id != target->id && seen(u)) others.push_back(&u);
  }
  std::sort(others.begin(), others.end(),
            [](const RoadUser* a, const RoadUser* b) { return a->id < b->id; });
  nodes.insert(nodes.end(), others.begin(), others.end());
  return nodes;
}

}  // namespace

GraphTensors assemble_sequence(const Scene& scene, const ObservationWindow& window,
                               const std::vector<ClusterSet>& clusters,
                               const NormalizationManifest& manifest,
                               const GraphOptions& options) {
  const std::size_t T = static_cast<std::size_t>(window.length);
  if (window.length < 1 || window.first_frame < 0 || window.last_frame() >= scene.frames) {
    throw DataError("window frame range outside scene");
  }
  if (options.edge_mode == EdgeMode::GraphSim && clusters.size() != T) {
    throw ComputeError("assemble_sequence: expected one cluster set per window frame");
  }
  const auto nodes = window_nodes(scene, window);
  const std::size_t N = nodes.size();
  GraphTensors g;
  g.manifest = manifest;
  for (const auto* u : nodes) g.node_ids.push_back(u->id);
  g.V = Tensor({N, kFeatureSize, T});
  g.A = Tensor({N, N, T});

  for (std::size_t k = 0; k < T; ++k) {
    const int t = window.first_frame + static_cast<int>(k);
    if (!nodes[0]->present(t)) {
      throw DataError("target pedestrian '" + window.target_id + "' absent at frame " +
                      std::to_string(t));
    }
    FrameGraphInput in;
    const Vec2 target_loc = nodes[0]->states[t].location;
    for (std::size_t i = 0; i < N; ++i) {
      const RoadUser& u = *nodes[i];
      const bool present = u.present(t);
      in.present.push_back(present);
      in.locations.push_back(present ? u.states[t].location : Vec2{});
      int cid = -1;
      if (present && options.edge_mode == EdgeMode::GraphSim && u.cls != ObjectClass::EgoVehicle) {
        cid = clusters[k].cluster_of(u.id);
      }
      in.cluster.push_back(cid);
      if (!present) continue;
      const FrameState& st = u.states[t];
      const NodeSnapshot snap{role_for(u.cls, i == 0), st.location,
                              sequence_speed(u, t, window.first_frame, scene.frame_rate,
                                             options.clustering.speed_definition),
                              st.length, st.width};
      const FeatureVector fv = encode_node(snap, target_loc, manifest, options);
      for (std::size_t q = 0; q < kFeatureSize; ++q) g.V.at(i, q, k) = fv[q];
    }
    Tensor A;
    if (options.edge_mode == EdgeMode::GraphSim) {
      Tensor B = build_B(in, scene.lanes, manifest.d_thresh);
      Tensor D = build_D(in, manifest.d_thresh);
      A = build_A(B, D);
      g.B.push_back(std::move(B));
      g.D.push_back(std::move(D));
    } else {
      A = build_inverse_distance_A(in);
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) g.A.at(i, j, k) = A.at(i, j);
    }
  }
  return g;
}

GraphTensors build_window_graph(const Scene& scene, const ObservationWindow& window,
                                const NormalizationManifest& manifest,
                                const GraphOptions& options) {
  std::vector<ClusterSet> clusters;
  if (options.edge_mode == EdgeMode::GraphSim) {
    for (int t = window.first_frame; t <= window.last_frame(); ++t) {
      clusters.push_back(cluster_frame(scene, t, options.clustering, window.first_frame));
    }
  }
  return assemble_sequence(scene, window, clusters, manifest, options);
}

NormalizationManifest fit_manifest(const std::vector<ObservationWindow>& windows,
                                   SpeedDefinition def, double d_thresh) {
  NormalizationManifest m;
  m.d_thresh = d_thresh;
  for (const auto& w : windows) {
    const Scene& s = *w.scene;
    auto visit = [&](const RoadUser& u) {
      for (int t = w.first_frame; t <= w.last_frame(); ++t) {
        if (!u.present(t)) continue;
        m.max_speed = std::max(m.max_speed, sequence_speed(u, t, w.first_frame, s.frame_rate, def));
        m.max_length = std::max(m.max_length, u.states[t].length);
        m.max_width = std::max(m.max_width, u.states[t].width);
      }
    };
    visit(s.ego);
    for (const auto& u : s.users) visit(u);
  }
  for (double* v : {&m.max_speed, &m.max_length, &m.max_width}) {
    if (!(*v > 0.0)) *v = 1.0;
  }
  m.fitted = true;
  return m;
}

GraphTensors pad_nodes(const GraphTensors& g, std::size_t n) {
  const std::size_t N = g.nodes();
  if (n < N) throw ComputeError("pad_nodes: cannot shrink a graph");
  const std::size_t T = g.frames();
  GraphTensors out;
  out.manifest = g.manifest;
  out.node_ids = g.node_ids;
  out.node_ids.resize(n, "");
  out.V = Tensor({n, kFeatureSize, T});
  out.A = Tensor({n, n, T});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t q = 0; q < kFeatureSize && i < N; ++q) out.V.at(i, q, t) = g.V.at(i, q, t);
      for (std::size_t j = 0; j < n; ++j) {
        out.A.at(i, j, t) = (i < N && j < N) ? g.A.at(i, j, t) : (i == j ? 1.0 : 0.0);
      }
    }
  }
  auto pad = [&](const Tensor& M, double off, double diag) {
    Tensor P({n, n}, off);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i < N && j < N) {
          P.at(i, j) = M.at(i, j);
        } else if (i == j) {
          P.at(i, j) = diag;
        }
      }
    }
    return P;
  };
  for (const auto& b : g.B) out.B.push_back(pad(b, 1.0, 0.0));
  for (const auto& d : g.D) out.D.push_back(pad(d, 1.0, 0.0));
  return out;
}

namespace {

void write_matrix(const std::filesystem::path& path, const Tensor& M) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.precision(17);
  for (std::size_t i = 0; i < M.dim(0); ++i) {
    for (std::size_t j = 0; j < M.dim(1); ++j) out << (j ? "," : "") << M.at(i, j);
    out << "\n";
  }
}

}  // namespace

void dump_graph_csv(const std::filesystem::path& dir, const GraphTensors& g) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream nodes(dir / "nodes.csv");
    nodes << "index,id\n";
    for (std::size_t i = 0; i < g.node_ids.size(); ++i) nodes << i << "," << g.node_ids[i] << "\n";
  }
  for (std::size_t t = 0; t < g.frames(); ++t) {
    const std::string suffix = "_t" + std::to_string(t) + ".csv";
    write_matrix(dir / ("V" + suffix), g.frame_features(t));
    write_matrix(dir / ("A" + suffix), g.frame_adjacency(t));
    if (t < g.B.size()) write_matrix(dir / ("B" + suffix), g.B[t]);
    if (t < g.D.size()) write_matrix(dir / ("D" + suffix), g.D[t]);
  }
}

}  // namespace graphsim
