#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "fixtures.hpp"
#include "graphsim/error.hpp"
#include "graphsim/evaluation.hpp"

using namespace graphsim;

namespace {

std::vector<LabeledPedestrian> population(int pos, int neg) {
  std::vector<LabeledPedestrian> out;
  for (int i = 0; i < pos; ++i) out.push_back({"scene:p" + std::to_string(i), 1});
  for (int i = 0; i < neg; ++i) out.push_back({"scene:n" + std::to_string(i), 0});
  return out;
}

int count_label(const std::vector<std::string>& keys, char tag) {
  return static_cast<int>(std::count_if(keys.begin(), keys.end(), [&](const std::string& k) { return k[6] == tag; }));
}

// Mann-Whitney concordance over all positive/negative pairs.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double concordant = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      concordant += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return concordant / pairs;
}

}  // namespace

TEST_CASE("stratified split examples") {
  const Split s = stratified_split(population(10, 20), 0.7, 7);
  CHECK(count_label(s.train, 'p') == 7);
  CHECK(count_label(s.test, 'p') == 3);
  CHECK(count_label(s.train, 'n') == 14);
  CHECK(count_label(s.test, 'n') == 6);

  const Split big = stratified_split(population(149, 570), 0.7, 7);
  CHECK(count_label(big.train, 'p') == 104);
  CHECK(count_label(big.test, 'p') == 45);
  CHECK(count_label(big.train, 'n') == 399);
  CHECK(count_label(big.test, 'n') == 171);

  const Split again = stratified_split(population(149, 570), 0.7, 7);
  CHECK(again.train == big.train);
  CHECK(again.test == big.test);
  CHECK(stratified_split(population(149, 570), 0.7, 8).train != big.train);

  std::set<std::string> train(big.train.begin(), big.train.end());
  for (const auto& k : big.test) CHECK(train.count(k) == 0);
  CHECK(big.train.size() + big.test.size() == 719);
  CHECK(big.in_train(big.train.front()));
  CHECK(big.in_test(big.test.front()));
  CHECK_FALSE(big.in_train(big.test.front()));

  CHECK_THROWS_AS(stratified_split(population(1, 20)), DataError);
  auto dup = population(3, 3);
  dup.push_back(dup.front());
  CHECK_THROWS_AS(stratified_split(dup), DataError);
}

TEST_CASE("metric examples") {
  const MetricsReport perfect = compute_metrics({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.auc == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.precision == 1.0);

  const MetricsReport negative = compute_metrics({0.1, 0.2, 0.3, 0.4}, {1, 0, 0, 0});
  CHECK(negative.accuracy == 0.75);
  CHECK(negative.f1 == 0.0);
  CHECK(negative.precision == 0.0);
  CHECK_FALSE(negative.precision_defined);

  // TP 3, FP 1, FN 2, TN 4.
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1, 0.05, 0.01};
  const std::vector<int> y{1, 1, 1, 0, 1, 1, 0, 0, 0, 0};
  const MetricsReport m = compute_metrics(s, y);
  CHECK(m.counts.tp == 3);
  CHECK(m.counts.fp == 1);
  CHECK(m.counts.fn == 2);
  CHECK(m.counts.tn == 4);
  CHECK(m.precision == 0.75);
  CHECK(m.recall == 0.6);
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.accuracy == 0.7);

  // Threshold is inclusive.
  CHECK(compute_metrics({0.5, 0.1}, {1, 0}).counts.tp == 1);

  const MetricsReport single = compute_metrics({0.3, 0.6}, {1, 1});
  CHECK_FALSE(single.auc_defined);
  CHECK(single.accuracy == 0.5);
  CHECK_FALSE(roc_auc({0.3}, {0}).has_value());
  CHECK_THROWS(compute_metrics({}, {}));

  const auto j = nlohmann::json::parse(metrics_json(m, s, y));
  CHECK(j["pairs"].size() == 10);
  CHECK(j["confusion"]["tp"] == 3);
  std::vector<double> rs;
  std::vector<int> ry;
  for (const auto& pair : j["pairs"]) {
    rs.push_back(pair[0].get<double>());
    ry.push_back(pair[1].get<int>());
  }
  const MetricsReport rescored = compute_metrics(rs, ry);
  CHECK(rescored.f1 == m.f1);
  CHECK(rescored.auc == m.auc);
}

TEST_CASE("AUC matches the pairwise oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 499;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores in some trials so ties are common.
      s[i] = trial % 2 ? std::round(fixtures::uniform(rng, 0, 10)) / 10.0 : fixtures::uniform(rng, 0, 1);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    const auto auc = roc_auc(s, y);
    REQUIRE(auc.has_value());
    CHECK(std::abs(*auc - pairwise_auc(s, y)) <= 1e-9);

    std::vector<double> warped(n);
    for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(std::abs(*roc_auc(warped, y) - *auc) <= 1e-12);
  }
}

TEST_CASE("random scores give AUC near one half") {
  std::mt19937_64 rng(5);
  std::vector<double> s(10000);
  std::vector<int> y(10000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = fixtures::uniform(rng, 0, 1);
    y[i] = static_cast<int>(i % 2);
  }
  CHECK(std::abs(*roc_auc(s, y) - 0.5) < 0.05);
}

TEST_CASE("ablation variants") {
  CHECK(table_variants(3).size() == 4);
  CHECK(table_variants(4).size() == 6);
  CHECK(table_variants(2).size() == 4);
  CHECK_THROWS(table_variants(5));
  std::set<std::string> ids;
  for (const auto& v : table_variants(3)) ids.insert(v.id());
  for (const auto& v : table_variants(4)) ids.insert(v.id());
  CHECK(ids.size() == 9);  // the complete row is shared

  GraphOptions g;
  ModelConfig m;
  apply_variant({GraphVariant::SocialStgcnnStyle, DynamicsSubset::PlusVehLocVel, ""}, g, m);
  CHECK(g.edge_mode == EdgeMode::InverseDistance);
  CHECK(g.node_features == NodeFeatures::LocationsOnly);
  CHECK_FALSE(g.clustering.enabled);

  apply_variant({GraphVariant::Complete, DynamicsSubset::PedLoc, ""}, g, m);
  CHECK(g.edge_mode == EdgeMode::GraphSim);
  CHECK(g.node_features == NodeFeatures::Full);
  CHECK(g.clustering.enabled);
  CHECK(g.clustering.pedestrian_orientation);
  CHECK(m.ped_fields == DynamicsFields::Location);
  CHECK_FALSE(m.use_ego_dynamics);

  apply_variant({GraphVariant::SGraphRIClustNoOrient, DynamicsSubset::PlusVehVel, ""}, g, m);
  CHECK(g.clustering.enabled);
  CHECK_FALSE(g.clustering.pedestrian_orientation);
  CHECK(m.use_ego_dynamics);
  CHECK(m.ego_fields == DynamicsFields::Velocity);
  CHECK(m.ped_fields == DynamicsFields::Both);

  CHECK(parse_graph_variant("s-graph+RI") == GraphVariant::SGraphRI);
  CHECK(parse_dynamics_subset("+veh-loc") == DynamicsSubset::PlusVehLoc);
  CHECK_THROWS_AS(parse_graph_variant("bogus"), ConfigError);

  AblationRow row{table_variants(3)[0], 0xabcULL, compute_metrics({0.9, 0.1}, {1, 0})};
  const std::string csv = ablation_csv(3, {row});
  CHECK(csv.find("0000000000000abc") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}
