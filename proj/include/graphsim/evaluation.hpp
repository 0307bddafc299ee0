#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphsim/clustering.hpp"
#include "graphsim/graph_builder.hpp"
#include "graphsim/model.hpp"

namespace graphsim {

struct LabeledPedestrian {
  std::string key;
  int label = 0;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;

  bool in_train(const std::string& key) const;
  bool in_test(const std::string& key) const;
};

// Per class: shuffle with the seed, then the first floor(ratio * n + 0.5)
// go to train. Keys must be unique.
Split stratified_split(const std::vector<LabeledPedestrian>& pedestrians, double train_ratio = 0.7,
                       std::uint64_t seed = 7);

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool auc_defined = false;
  bool precision_defined = false;  // false when nothing was predicted positive
  ConfusionCounts counts;
  std::size_t n = 0;
};

// Area under the ROC curve by trapezoids over distinct score cuts. Empty when
// only one class is present.
std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

MetricsReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold = 0.5);

std::string metrics_json(const MetricsReport& m, const std::vector<double>& scores,
                         const std::vector<int>& labels);

enum class GraphVariant { SocialStgcnnStyle, SGraphRI, SGraphRIClustNoOrient, Complete };
enum class DynamicsSubset {
  PedLoc,
  PedVel,
  PedLocVel,
  PlusVehLoc,
  PlusVehVel,
  PlusVehLocVel,
  VehLocVel,  // ego stream only
};

const char* to_string(GraphVariant v);
const char* to_string(DynamicsSubset d);
GraphVariant parse_graph_variant(const std::string& s);
DynamicsSubset parse_dynamics_subset(const std::string& s);

struct AblationSpec {
  GraphVariant graph = GraphVariant::Complete;
  DynamicsSubset dynamics = DynamicsSubset::PlusVehLocVel;
  std::string row;  // table row label

  std::string id() const;
};

// Rows of the experiment tables: 2 (method comparison), 3 (graph
// components), 4 (dynamics inputs).
std::vector<AblationSpec> table_variants(int table);

// Rewrites graph, clustering and model switches for a variant.
void apply_variant(const AblationSpec& spec, GraphOptions& graph, ModelConfig& model);

struct AblationRow {
  AblationSpec spec;
  std::uint64_t config_hash = 0;
  MetricsReport metrics;
};

std::string ablation_csv(int table, const std::vector<AblationRow>& rows);

}  // namespace graphsim
