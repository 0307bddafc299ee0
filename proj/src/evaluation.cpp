#include "graphsim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "graphsim/error.hpp"

namespace graphsim {

bool Split::in_train(const std::string& key) const {
  return std::find(train.begin(), train.end(), key) != train.end();
}

bool Split::in_test(const std::string& key) const {
  return std::find(test.begin(), test.end(), key) != test.end();
}

Split stratified_split(const std::vector<LabeledPedestrian>& pedestrians, double train_ratio,
                       std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ConfigError("split ratio must be in (0, 1)");
  }
  std::map<int, std::vector<std::string>> by_class;
  std::set<std::string> seen;
  for (const auto& p : pedestrians) {
    if (!seen.insert(p.key).second) throw DataError("duplicate pedestrian '" + p.key + "' in split");
    if (p.label != 0 && p.label != 1) throw DataError("label of '" + p.key + "' must be 0 or 1");
    by_class[p.label].push_back(p.key);
  }
  for (int label : {0, 1}) {
    const std::size_t n = by_class[label].size();
    if (n < 2) {
      throw DataError("class " + std::to_string(label) + " has " + std::to_string(n) +
                      " pedestrians; at least 2 are needed to split");
    }
  }
  Split split;
  std::mt19937_64 rng(seed);
  for (int label : {1, 0}) {
    auto& keys = by_class[label];
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = keys.size(); i > 1; --i) std::swap(keys[i - 1], keys[rng() % i]);
    const auto n_train =
        static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(keys.size()) + 0.5));
    split.train.insert(split.train.end(), keys.begin(), keys.begin() + n_train);
    split.test.insert(split.test.end(), keys.begin() + n_train, keys.end());
  }
  return split;
}

std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ComputeError("roc_auc: size mismatch");
  long pos = 0;
  for (int y : labels) pos += y == 1 ? 1 : 0;
  const long neg = static_cast<long>(labels.size()) - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double area = 0.0;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const long tp0 = tp, fp0 = fp;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (labels[order[i]] == 1) ++tp;
      else ++fp;
    }
    area += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0) * 0.5;
  }
  return area / (static_cast<double>(pos) * static_cast<double>(neg));
}

MetricsReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold) {
  if (scores.empty()) throw ComputeError("compute_metrics: no predictions");
  if (scores.size() != labels.size()) throw ComputeError("compute_metrics: size mismatch");
  MetricsReport m;
  m.n = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++m.counts.tp;
    else if (predicted) ++m.counts.fp;
    else if (actual) ++m.counts.fn;
    else ++m.counts.tn;
  }
  const auto& c = m.counts;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(m.n);
  m.precision_defined = c.tp + c.fp > 0;
  m.precision = m.precision_defined ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = c.tp > 0 ? 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn) : 0.0;
  if (auto auc = roc_auc(scores, labels)) {
    m.auc = *auc;
    m.auc_defined = true;
  }
  return m;
}

std::string metrics_json(const MetricsReport& m, const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["auc"] = m.auc_defined ? nlohmann::ordered_json(m.auc) : nlohmann::ordered_json(nullptr);
  j["f1"] = m.f1;
  j["precision"] = m.precision;
  j["precision_defined"] = m.precision_defined;
  j["recall"] = m.recall;
  j["confusion"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"tn", m.counts.tn}};
  j["n"] = m.n;
  auto pairs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scores.size(); ++i) pairs.push_back({scores[i], labels[i]});
  j["pairs"] = pairs;
  return j.dump(2) + "\n";
}

const char* to_string(GraphVariant v) {
  switch (v) {
    case GraphVariant::SocialStgcnnStyle: return "social-stgcnn-style";
    case GraphVariant::SGraphRI: return "s-graph+RI";
    case GraphVariant::SGraphRIClustNoOrient: return "s-graph+RI+clust-no-orient";
    case GraphVariant::Complete: return "complete";
  }
  return "complete";
}

const char* to_string(DynamicsSubset d) {
  switch (d) {
    case DynamicsSubset::PedLoc: return "ped-loc";
    case DynamicsSubset::PedVel: return "ped-vel";
    case DynamicsSubset::PedLocVel: return "ped-loc/vel";
    case DynamicsSubset::PlusVehLoc: return "+veh-loc";
    case DynamicsSubset::PlusVehVel: return "+veh-vel";
    case DynamicsSubset::PlusVehLocVel: return "+veh-loc/vel";
    case DynamicsSubset::VehLocVel: return "veh-loc/vel";
  }
  return "+veh-loc/vel";
}

GraphVariant parse_graph_variant(const std::string& s) {
  for (auto v : {GraphVariant::SocialStgcnnStyle, GraphVariant::SGraphRI,
                 GraphVariant::SGraphRIClustNoOrient, GraphVariant::Complete}) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError("unknown graph variant '" + s + "'");
}

DynamicsSubset parse_dynamics_subset(const std::string& s) {
  for (auto d : {DynamicsSubset::PedLoc, DynamicsSubset::PedVel, DynamicsSubset::PedLocVel,
                 DynamicsSubset::PlusVehLoc, DynamicsSubset::PlusVehVel,
                 DynamicsSubset::PlusVehLocVel, DynamicsSubset::VehLocVel}) {
    if (s == to_string(d)) return d;
  }
  throw ConfigError("unknown dynamics subset '" + s + "'");
}

std::string AblationSpec::id() const {
  return std::string(to_string(graph)) + "|" + to_string(dynamics);
}

std::vector<AblationSpec> table_variants(int table) {
  using G = GraphVariant;
  using D = DynamicsSubset;
  switch (table) {
    case 2:
      return {{G::SocialStgcnnStyle, D::PlusVehLocVel, "Social-STGCNN"},
              {G::Complete, D::PedLocVel, "Graph+Ped."},
              {G::Complete, D::VehLocVel, "Graph+Veh."},
              {G::Complete, D::PlusVehLocVel, "Complete"}};
    case 3:
      return {{G::SocialStgcnnStyle, D::PlusVehLocVel, "Social-STGCNN"},
              {G::SGraphRI, D::PlusVehLocVel, "S-Graph+RI"},
              {G::SGraphRIClustNoOrient, D::PlusVehLocVel, "S-Graph+RI+Clust. w/o Ped. Orient."},
              {G::Complete, D::PlusVehLocVel, "S-Graph+RI+Clust."}};
    case 4:
      return {{G::Complete, D::PedLoc, "Ped. loc."},
              {G::Complete, D::PedVel, "Ped. vel."},
              {G::Complete, D::PedLocVel, "Ped. loc./vel."},
              {G::Complete, D::PlusVehLoc, "Ped. loc./vel. + Veh. loc."},
              {G::Complete, D::PlusVehVel, "Ped. loc./vel. + Veh. vel."},
              {G::Complete, D::PlusVehLocVel, "Ped. loc./vel. + Veh. loc./vel."}};
    default:
      throw ConfigError("unknown table " + std::to_string(table) + " (expected 2, 3 or 4)");
  }
}

void apply_variant(const AblationSpec& spec, GraphOptions& graph, ModelConfig& model) {
  auto& cl = graph.clustering;
  graph.edge_mode = EdgeMode::GraphSim;
  graph.node_features = NodeFeatures::Full;
  cl.enabled = true;
  cl.pedestrian_orientation = true;
  cl.vehicle_orientation = true;
  switch (spec.graph) {
    case GraphVariant::SocialStgcnnStyle:
      graph.edge_mode = EdgeMode::InverseDistance;
      graph.node_features = NodeFeatures::LocationsOnly;
      cl.enabled = false;
      break;
    case GraphVariant::SGraphRI:
      cl.enabled = false;
      break;
    case GraphVariant::SGraphRIClustNoOrient:
      cl.pedestrian_orientation = false;
      break;
    case GraphVariant::Complete:
      break;
  }
  model.use_ped_dynamics = true;
  model.use_ego_dynamics = true;
  model.ped_fields = DynamicsFields::Both;
  model.ego_fields = DynamicsFields::Both;
  switch (spec.dynamics) {
    case DynamicsSubset::PedLoc:
      model.ped_fields = DynamicsFields::Location;
      model.use_ego_dynamics = false;
      break;
    case DynamicsSubset::PedVel:
      model.ped_fields = DynamicsFields::Velocity;
      model.use_ego_dynamics = false;
      break;
    case DynamicsSubset::PedLocVel:
      model.use_ego_dynamics = false;
      break;
    case DynamicsSubset::PlusVehLoc:
      model.ego_fields = DynamicsFields::Location;
      break;
    case DynamicsSubset::PlusVehVel:
      model.ego_fields = DynamicsFields::Velocity;
      break;
    case DynamicsSubset::PlusVehLocVel:
      break;
    case DynamicsSubset::VehLocVel:
      model.use_ped_dynamics = false;
      break;
  }
}

std::string ablation_csv(int table, const std::vector<AblationRow>& rows) {
  const char* header = table == 2 ? "Method" : table == 3 ? "Graph Component" : "Input Features";
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << header << ",Acc,AUC,F1,Prec,variant,config_hash\n";
  for (const auto& r : rows) {
    os << '"' << r.spec.row << "\"," << r.metrics.accuracy << ",";
    if (r.metrics.auc_defined) os << r.metrics.auc;
    os << "," << r.metrics.f1 << "," << r.metrics.precision << "," << r.spec.id() << ","
       << std::hex << std::setw(16) << std::setfill('0') << r.config_hash
       << std::dec << std::setfill(' ') << "\n";
  }
  return os.str();
}

}  // namespace graphsim
