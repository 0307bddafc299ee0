#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "graphsim/error.hpp"
#include "graphsim/scene.hpp"

using namespace graphsim;
using fixtures::empty_scene;
using fixtures::make_user;

TEST_CASE("speed at the first frame is zero") {
  Scene s = empty_scene(3);
  auto u = make_user(s, "p", ObjectClass::Pedestrian, [](int t) { return Vec2{3.0 * t, 4.0 * t}; });
  CHECK(compute_speed(u, 0, 10.0) == 0.0);
}

TEST_CASE("speed divides displacement by the frame rate") {
  Scene s = empty_scene(2);
  auto u = make_user(s, "p", ObjectClass::Pedestrian, [](int t) { return Vec2{3.0 * t, 4.0 * t}; });
  CHECK(compute_speed(u, 1, 10.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(compute_speed(u, 1, 10.0, SpeedDefinition::Physical) == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("zero displacement gives zero speed") {
  Scene s = empty_scene(4);
  auto u = make_user(s, "p", ObjectClass::Pedestrian, [](int) { return Vec2{2.0, 1.0}; });
  for (int t = 0; t < 4; ++t) CHECK(compute_speed(u, t, 10.0) == 0.0);
}

TEST_CASE("speed is undefined across an absence") {
  Scene s = empty_scene(4);
  auto u = make_user(s, "p", ObjectClass::Pedestrian, [](int t) { return Vec2{1.0 * t, 0}; }, 2, 3);
  CHECK_THROWS_AS(compute_speed(u, 2, 10.0), DataError);
  CHECK_THROWS_AS(compute_speed(u, 1, 10.0), DataError);
  CHECK(compute_speed(u, 3, 10.0) == doctest::Approx(0.1));
}

TEST_CASE("velocity is the per-frame displacement") {
  Scene s = empty_scene(2);
  auto u = make_user(s, "p", ObjectClass::Pedestrian,
                     [](int t) { return t == 0 ? Vec2{4.0, 3.0} : Vec2{5.0, 1.0}; });
  CHECK(compute_velocity(u, 0) == Vec2{0.0, 0.0});
  CHECK(compute_velocity(u, 1) == Vec2{1.0, -2.0});
  auto still = make_user(s, "q", ObjectClass::Pedestrian, [](int) { return Vec2{7.0, 7.0}; });
  CHECK(compute_velocity(still, 1) == Vec2{0.0, 0.0});
}

TEST_CASE("speed is translation invariant and velocities telescope") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Scene s = empty_scene(12);
    std::vector<Vec2> path;
    for (int t = 0; t < 12; ++t) {
      path.push_back({fixtures::uniform(rng, -50, 50), fixtures::uniform(rng, -50, 50)});
    }
    const Vec2 shift{fixtures::uniform(rng, -100, 100), fixtures::uniform(rng, -100, 100)};
    auto a = make_user(s, "a", ObjectClass::Vehicle, [&](int t) { return path[t]; });
    auto b = make_user(s, "b", ObjectClass::Vehicle, [&](int t) { return path[t] + shift; });
    Vec2 sum;
    for (int t = 0; t < 12; ++t) {
      CHECK(compute_speed(a, t, 10.0) == doctest::Approx(compute_speed(b, t, 10.0)).epsilon(1e-9));
      if (t >= 1) sum = sum + compute_velocity(a, t);
    }
    CHECK(sum.x == doctest::Approx(path[11].x - path[0].x).epsilon(1e-12));
    CHECK(sum.y == doctest::Approx(path[11].y - path[0].y).epsilon(1e-12));
  }
}

TEST_CASE("crossing windows end one to two seconds before crossing starts") {
  Scene s = empty_scene(60);
  s.users.push_back(make_user(s, "p", ObjectClass::Pedestrian, [](int) { return Vec2{}; }));
  BehaviourRecord rec{"p", true, 40, std::nullopt};
  const auto w = extract_windows(s, rec, WindowSpec{});
  std::vector<int> ends;
  for (const auto& x : w) ends.push_back(x.last_frame());
  // Oracle: every end e with 10 <= 40 - e <= 20 that is reachable with stride 2.
  std::vector<int> expected;
  for (int e = 0; e < 40; ++e) {
    if (40 - e >= 10 && 40 - e <= 20 && (e - 20) % 2 == 0 && e - 4 >= 0) expected.push_back(e);
  }
  CHECK(ends == expected);
  CHECK(ends == std::vector<int>{20, 22, 24, 26, 28, 30});
  for (const auto& x : w) CHECK(x.label == 1);
}

TEST_CASE("window longer than the scene yields nothing") {
  Scene s = empty_scene(4);
  s.users.push_back(make_user(s, "p", ObjectClass::Pedestrian, [](int) { return Vec2{}; }));
  CHECK(extract_windows(s, {"p", false, std::nullopt, std::nullopt}, WindowSpec{}).empty());
}

TEST_CASE("non-crossing pedestrian visible for 30 frames") {
  // Visible frames 0..29 (an end-exclusive reading of [0..30]).
  Scene s = empty_scene(40);
  s.users.push_back(make_user(s, "p", ObjectClass::Pedestrian, [](int) { return Vec2{}; }, 0, 29));
  const auto w = extract_windows(s, {"p", false, std::nullopt, std::nullopt}, WindowSpec{});
  int count = 0;
  for (int first = 0; first + 4 <= 29; first += 2) ++count;
  CHECK(static_cast<int>(w.size()) == count);
  CHECK(w.size() == 13);
  for (const auto& x : w) CHECK(x.label == 0);
}

TEST_CASE("windows agree with brute-force enumeration on random visibility") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int frames = 10 + static_cast<int>(rng() % 50);
    Scene s = empty_scene(frames);
    const int first = static_cast<int>(rng() % frames);
    const int last = first + static_cast<int>(rng() % (frames - first));
    s.users.push_back(make_user(s, "p", ObjectClass::Pedestrian, [](int) { return Vec2{}; }, first, last));
    const bool cross = rng() % 2 == 0;
    BehaviourRecord rec{"p", cross, std::nullopt, std::nullopt};
    if (cross) rec.crossing_start_frame = static_cast<int>(rng() % frames);
    const WindowSpec spec;
    const auto got = extract_windows(s, rec, spec);

    std::vector<int> expected;
    if (cross) {
      // The stride grid starts at the earliest admissible end.
      const int start = *rec.crossing_start_frame;
      for (int e = std::max(start - 20, first + 4); e <= start - 10; e += 2) {
        if (e <= last && e < start) expected.push_back(e);
      }
    } else {
      for (int e = first + 4; e <= last; e += 2) expected.push_back(e);
    }
    std::vector<int> ends;
    for (const auto& w : got) {
      ends.push_back(w.last_frame());
      CHECK(w.length == 5);
      CHECK(w.label == (cross ? 1 : 0));
      for (int t = w.first_frame; t <= w.last_frame(); ++t) CHECK(s.users[0].present(t));
    }
    CHECK(ends == expected);
  }
}

TEST_CASE("scene validation catches broken invariants") {
  Scene s = empty_scene(3);
  s.users.push_back(make_user(s, "p", ObjectClass::Pedestrian, [](int) { return Vec2{}; }));
  CHECK_NOTHROW(validate_scene(s));
  Scene bad = s;
  bad.users[0].states[1].orientation = {2.0, 0.0};
  CHECK_THROWS_AS(validate_scene(bad), DataError);
  bad = s;
  bad.timestamps[2] = 0.5;
  CHECK_THROWS_AS(validate_scene(bad), DataError);
  bad = s;
  bad.users[0].states.pop_back();
  CHECK_THROWS_AS(validate_scene(bad), DataError);
}

TEST_CASE("drivable test counts the boundary as inside") {
  LaneGraph g;
  g.drivable_polygons.push_back({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  CHECK(g.is_drivable({2, 2}));
  CHECK(g.is_drivable({0, 2}));
  CHECK(g.is_drivable({4, 4}));
  CHECK_FALSE(g.is_drivable({4.001, 2}));
}
