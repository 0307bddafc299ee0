#include "graphsim/config.hpp"

#include <fstream>
#include <sstream>

#include "graphsim/error.hpp"

namespace graphsim {

using nlohmann::json;

namespace {

const char* speed_name(SpeedDefinition d) {
  return d == SpeedDefinition::DisplacementOverRate ? "displacement_over_rate" : "physical";
}

SpeedDefinition parse_speed(const std::string& s) {
  if (s == "displacement_over_rate") return SpeedDefinition::DisplacementOverRate;
  if (s == "physical") return SpeedDefinition::Physical;
  throw ConfigError("clustering.speed_definition must be 'displacement_over_rate' or 'physical'");
}

EdgeMode parse_edge_mode(const std::string& s) {
  if (s == "graphsim") return EdgeMode::GraphSim;
  if (s == "inverse-distance") return EdgeMode::InverseDistance;
  throw ConfigError("graph.edge_mode must be 'graphsim' or 'inverse-distance'");
}

NodeFeatures parse_node_features(const std::string& s) {
  if (s == "full") return NodeFeatures::Full;
  if (s == "locations") return NodeFeatures::LocationsOnly;
  throw ConfigError("graph.node_features must be 'full' or 'locations'");
}

AdjacencyNormalization parse_adjacency(const std::string& s) {
  if (s == "none") return AdjacencyNormalization::None;
  if (s == "symmetric") return AdjacencyNormalization::Symmetric;
  throw ConfigError("model.adjacency must be 'none' or 'symmetric'");
}

bool same_kind(const json& a, const json& b) {
  if (a.is_boolean() || b.is_boolean()) return a.is_boolean() && b.is_boolean();
  if (a.is_number() || b.is_number()) return a.is_number() && b.is_number();
  return a.type() == b.type();
}

}  // namespace

json RunConfig::to_json() const {
  const auto& cl = graph.clustering;
  json j;
  j["seed"] = seed;
  j["data.dir"] = data_dir;
  j["data.synthetic"] = synthetic;
  j["data.synthetic_pedestrians"] = synthetic_pedestrians;
  j["window.length"] = window.length;
  j["window.stride"] = window.stride;
  j["window.pre_event_min_s"] = window.pre_event_min_s;
  j["window.pre_event_max_s"] = window.pre_event_max_s;
  j["split.ratio"] = split_ratio;
  j["eval.threshold"] = threshold;
  j["graph.d_thresh"] = d_thresh;
  j["graph.edge_mode"] = graph.edge_mode == EdgeMode::GraphSim ? "graphsim" : "inverse-distance";
  j["graph.node_features"] = graph.node_features == NodeFeatures::Full ? "full" : "locations";
  j["graph.signed_rel_coords"] = graph.signed_rel_coords;
  j["clustering.enabled"] = cl.enabled;
  j["clustering.pedestrian_orientation"] = cl.pedestrian_orientation;
  j["clustering.vehicle_orientation"] = cl.vehicle_orientation;
  j["clustering.ped_speed_threshold"] = cl.ped_speed_threshold;
  j["clustering.vehicle_speed_threshold"] = cl.vehicle_speed_threshold;
  j["clustering.bicycle_speed_threshold"] = cl.bicycle_speed_threshold;
  j["clustering.ped_eps"] = cl.ped_eps;
  j["clustering.vehicle_eps"] = cl.vehicle_eps;
  j["clustering.bicycle_eps"] = cl.bicycle_eps;
  j["clustering.min_pts"] = cl.min_pts;
  j["clustering.opposite_angle_deg"] = cl.opposite_angle_deg;
  j["clustering.kmeans_max_iterations"] = cl.kmeans_max_iterations;
  j["clustering.speed_definition"] = speed_name(cl.speed_definition);
  j["model.spatial_hidden"] = model.spatial_hidden;
  j["model.graph_out"] = model.graph_out;
  j["model.graph_lstm"] = model.graph_lstm;
  j["model.ped_lstm"] = model.ped_lstm;
  j["model.ego_lstm"] = model.ego_lstm;
  j["model.attention_dim"] = model.attention_dim;
  j["model.adjacency"] = model.adjacency == AdjacencyNormalization::None ? "none" : "symmetric";
  j["model.use_ped_dynamics"] = model.use_ped_dynamics;
  j["model.use_ego_dynamics"] = model.use_ego_dynamics;
  j["model.ped_fields"] = to_string(model.ped_fields);
  j["model.ego_fields"] = to_string(model.ego_fields);
  j["model.recenter_dynamics"] = model.recenter_dynamics;
  j["train.learning_rate"] = train.learning_rate;
  j["train.batch_size"] = train.batch_size;
  j["train.epochs"] = train.epochs;
  j["train.class_weighting"] = train.class_weighting;
  return j;
}

RunConfig RunConfig::from_json(const json& flat) {
  if (!flat.is_object()) throw ConfigError("configuration must be a JSON object");
  json merged = RunConfig{}.to_json();
  for (const auto& [key, value] : flat.items()) {
    if (!merged.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
    if (!same_kind(merged[key], value)) {
      throw ConfigError("configuration key '" + key + "' has the wrong type");
    }
    merged[key] = value;
  }
  RunConfig c;
  try {
    auto& cl = c.graph.clustering;
    c.seed = merged["seed"].get<std::uint64_t>();
    c.data_dir = merged["data.dir"].get<std::string>();
    c.synthetic = merged["data.synthetic"].get<std::string>();
    c.synthetic_pedestrians = merged["data.synthetic_pedestrians"].get<int>();
    c.window.length = merged["window.length"].get<int>();
    c.window.stride = merged["window.stride"].get<int>();
    c.window.pre_event_min_s = merged["window.pre_event_min_s"].get<double>();
    c.window.pre_event_max_s = merged["window.pre_event_max_s"].get<double>();
    c.split_ratio = merged["split.ratio"].get<double>();
    c.threshold = merged["eval.threshold"].get<double>();
    c.d_thresh = merged["graph.d_thresh"].get<double>();
    c.graph.edge_mode = parse_edge_mode(merged["graph.edge_mode"].get<std::string>());
    c.graph.node_features = parse_node_features(merged["graph.node_features"].get<std::string>());
    c.graph.signed_rel_coords = merged["graph.signed_rel_coords"].get<bool>();
    cl.enabled = merged["clustering.enabled"].get<bool>();
    cl.pedestrian_orientation = merged["clustering.pedestrian_orientation"].get<bool>();
    cl.vehicle_orientation = merged["clustering.vehicle_orientation"].get<bool>();
    cl.ped_speed_threshold = merged["clustering.ped_speed_threshold"].get<double>();
    cl.vehicle_speed_threshold = merged["clustering.vehicle_speed_threshold"].get<double>();
    cl.bicycle_speed_threshold = merged["clustering.bicycle_speed_threshold"].get<double>();
    cl.ped_eps = merged["clustering.ped_eps"].get<double>();
    cl.vehicle_eps = merged["clustering.vehicle_eps"].get<double>();
    cl.bicycle_eps = merged["clustering.bicycle_eps"].get<double>();
    cl.min_pts = merged["clustering.min_pts"].get<int>();
    cl.opposite_angle_deg = merged["clustering.opposite_angle_deg"].get<double>();
    cl.kmeans_max_iterations = merged["clustering.kmeans_max_iterations"].get<int>();
    cl.speed_definition = parse_speed(merged["clustering.speed_definition"].get<std::string>());
    c.model.spatial_hidden = merged["model.spatial_hidden"].get<std::size_t>();
    c.model.graph_out = merged["model.graph_out"].get<std::size_t>();
    c.model.graph_lstm = merged["model.graph_lstm"].get<std::size_t>();
    c.model.ped_lstm = merged["model.ped_lstm"].get<std::size_t>();
    c.model.ego_lstm = merged["model.ego_lstm"].get<std::size_t>();
    c.model.attention_dim = merged["model.attention_dim"].get<std::size_t>();
    c.model.adjacency = parse_adjacency(merged["model.adjacency"].get<std::string>());
    c.model.use_ped_dynamics = merged["model.use_ped_dynamics"].get<bool>();
    c.model.use_ego_dynamics = merged["model.use_ego_dynamics"].get<bool>();
    c.model.ped_fields = parse_dynamics_fields(merged["model.ped_fields"].get<std::string>());
    c.model.ego_fields = parse_dynamics_fields(merged["model.ego_fields"].get<std::string>());
    c.model.recenter_dynamics = merged["model.recenter_dynamics"].get<bool>();
    c.train.learning_rate = merged["train.learning_rate"].get<double>();
    c.train.batch_size = merged["train.batch_size"].get<std::size_t>();
    c.train.epochs = merged["train.epochs"].get<std::size_t>();
    c.train.class_weighting = merged["train.class_weighting"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid configuration value: ") + e.what());
  }
  c.finalize();
  return c;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("expected key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json flat = to_json();
  if (!flat.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
  flat[key] = value;
  *this = from_json(flat);
}

void RunConfig::finalize() {
  model.seed = seed;
  train.seed = seed;
  if (window.length < 1 || window.stride < 1) throw ConfigError("window length and stride must be >= 1");
  if (!(window.pre_event_min_s >= 0.0 && window.pre_event_max_s >= window.pre_event_min_s)) {
    throw ConfigError("window pre-event range must satisfy 0 <= min <= max");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split.ratio must be in (0, 1)");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("eval.threshold must be in [0, 1]");
  if (!(d_thresh > 0.0)) throw ConfigError("graph.d_thresh must be positive");
  if (!synthetic.empty() && synthetic != "separable" && synthetic != "directional") {
    throw ConfigError("data.synthetic must be '', 'separable' or 'directional'");
  }
  if (synthetic_pedestrians < 1) throw ConfigError("data.synthetic_pedestrians must be >= 1");
  graph.clustering.validate();
  model.validate();
  train.validate();
}

std::string RunConfig::canonical() const { return to_json().dump(); }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return RunConfig::from_json(j);
}

}  // namespace graphsim
