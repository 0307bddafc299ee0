#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "graphsim/error.hpp"
#include "graphsim/pipeline.hpp"
#include "graphsim/synthetic.hpp"

using namespace graphsim;

namespace {

bool same_scene(const LoadedScene& a, const LoadedScene& b) {
  return annotation_to_json(annotations_from_scene(a.scene, a.behaviours)) ==
         annotation_to_json(annotations_from_scene(b.scene, b.behaviours));
}

}  // namespace

TEST_CASE("generation is deterministic and valid") {
  ScenarioSpec spec;
  spec.seed = 3;
  spec.parked_vehicles = 2;
  spec.bicycles = 2;
  spec.layout = LaneTemplate::TJunction;
  const LoadedScene a = generate_scene(spec);
  const LoadedScene b = generate_scene(spec);
  CHECK(same_scene(a, b));
  spec.seed = 4;
  CHECK_FALSE(same_scene(a, generate_scene(spec)));
  CHECK_NOTHROW(validate_scene(a.scene));
  CHECK(a.scene.users.size() == 3 + 2 + 2 + 2);

  ScenarioSpec empty;
  empty.frames = 0;
  CHECK_THROWS(generate_scene(empty));
}

TEST_CASE("standers never reach the motion threshold and crossers start on the road") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScenarioSpec spec;
    spec.seed = seed;
    spec.crossers = 2;
    spec.walkers = 1;
    spec.standers = 2;
    const LoadedScene ls = generate_scene(spec);
    for (const auto& rec : ls.behaviours) {
      const RoadUser& u = *ls.scene.find_user(rec.pedestrian_id);
      for (int t = 0; t < ls.scene.frames; ++t) {
        if (u.present(t) && u.present(t - 1)) {
          // Speed agrees with a direct recomputation.
          const double direct = distance(u.states[t].location, u.states[t - 1].location) / ls.scene.frame_rate;
          CHECK(compute_speed(u, t, ls.scene.frame_rate) == doctest::Approx(direct).epsilon(1e-12));
        }
      }
      if (rec.will_cross) {
        const int start = *rec.crossing_start_frame;
        CHECK(ls.scene.lanes.is_drivable(u.states[start].location));
        for (int t = 0; t < start; ++t) CHECK_FALSE(ls.scene.lanes.is_drivable(u.states[t].location));
      }
    }
    // Standers are the last two pedestrians.
    for (const char* id : {"ped_003", "ped_004"}) {
      const RoadUser& u = *ls.scene.find_user(id);
      for (int t = 0; t < ls.scene.frames; ++t) {
        CHECK(compute_speed(u, t, ls.scene.frame_rate, SpeedDefinition::Physical) < 0.2);
      }
    }
  }
}

TEST_CASE("separable set: balance, valid windows, linear probe") {
  Dataset data;
  data.scenes = separable_dataset(200, 7);
  int pos = 0, total = 0;
  for (const auto& ls : data.scenes) {
    CHECK_NOTHROW(validate_scene(ls.scene));
    for (const auto& rec : ls.behaviours) {
      pos += rec.will_cross;
      ++total;
    }
  }
  CHECK(total == 200);
  CHECK(std::abs(pos - 100) <= 1);

  const LabeledWindows lw = collect_windows(data, WindowSpec{});
  REQUIRE_FALSE(lw.windows.empty());
  std::vector<std::array<double, 2>> x;
  std::vector<int> y;
  for (const auto& w : lw.windows) {
    const RoadUser& u = *w.scene->find_user(w.target_id);
    CHECK(w.length == 5);
    for (int t = w.first_frame; t <= w.last_frame(); ++t) CHECK(u.present(t));
    const ApproachFeatures f = approach_features(*w.scene, w);
    x.push_back({f.approach_speed, f.heading_angle});
    y.push_back(w.label);
  }
  // Perceptron on standardised features; it only converges on separable data.
  std::array<double, 2> mean{}, sd{};
  for (const auto& v : x)
    for (int k = 0; k < 2; ++k) mean[k] += v[k] / static_cast<double>(x.size());
  for (const auto& v : x)
    for (int k = 0; k < 2; ++k) sd[k] += (v[k] - mean[k]) * (v[k] - mean[k]) / static_cast<double>(x.size());
  for (int k = 0; k < 2; ++k) sd[k] = std::sqrt(sd[k]);
  double w0 = 0, w1 = 0, bias = 0;
  int errors = -1;
  for (int epoch = 0; epoch < 5000 && errors != 0; ++epoch) {
    errors = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = (x[i][0] - mean[0]) / sd[0], b = (x[i][1] - mean[1]) / sd[1];
      const int target = y[i] ? 1 : -1;
      if (target * (w0 * a + w1 * b + bias) <= 0) {
        w0 += target * a;
        w1 += target * b;
        bias += target;
        ++errors;
      }
    }
  }
  CHECK(errors == 0);
}

TEST_CASE("directional set: labels depend on where the parked group sits") {
  const auto scenes = directional_group_dataset(40, 7);
  int pos = 0;
  for (const auto& ls : scenes) {
    CHECK_NOTHROW(validate_scene(ls.scene));
    for (const auto& rec : ls.behaviours) pos += rec.will_cross;
  }
  CHECK(pos == 20);
  CHECK(directional_group_dataset(8, 3).size() == directional_group_dataset(8, 3).size());
  CHECK(same_scene(directional_group_dataset(8, 3)[5], directional_group_dataset(8, 3)[5]));
  CHECK_THROWS(directional_group_dataset(2, 3));
  CHECK_THROWS(separable_dataset(10, 3));
}

TEST_CASE("oracle agrees with clustering on generated scenes") {
  ClusteringParams p;
  ScenarioSpec spec;
  spec.crossers = 3;
  spec.walkers = 3;
  spec.standers = 3;
  spec.parked_vehicles = 3;
  spec.bicycles = 2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    spec.seed = seed;
    const LoadedScene ls = generate_scene(spec);
    for (int t = 0; t < ls.scene.frames; t += 7) {
      const auto objs = frame_objects(ls.scene, t);
      CHECK(fixtures::partition(cluster_objects(objs, ls.scene.frame_rate, p)) ==
            brute_force_cluster_oracle(objs, ls.scene.frame_rate, p));
    }
  }
  ClusteringParams strict = p;
  strict.min_pts = 2;
  CHECK_THROWS_AS(brute_force_cluster_oracle({}, 10.0, strict), ConfigError);
}
