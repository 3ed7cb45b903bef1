#include <cmath>
#include <sstream>

#include "doctest.h"
#include "handopt/env.hpp"

using namespace handopt;
using namespace handopt::env;

namespace {

EpisodeConfig still_episode(const ObjectSpec& obj, Pose2 start = {}, Pose2 goal = {}) {
  EpisodeConfig cfg;
  cfg.object = obj;
  cfg.initial_object_pose = start;
  cfg.goal = goal;
  return cfg;
}

Action random_action(Rng& rng) {
  Action a;
  for (auto& v : a) v = rng.uniform(-1.0, 1.0);
  return a;
}

}  // namespace

TEST_CASE("hand construction") {
  const auto v3 = build_hand(design::dash_v3());
  for (const auto& f : v3.fingers) {
    CHECK(f.link_lengths == std::array<double, 3>{45, 20, 35});
  }
  const std::array<double, 3> straight{0, 0, 0};
  const auto pts = finger_points(v3.fingers[kIndex], straight);
  CHECK(norm(pts[3] - pts[0]) == doctest::Approx(100));
  CHECK(v3.fingers[kIndex].base.x == 28);
  CHECK(v3.fingers[kIndex].base.y == doctest::Approx(84 - 42));

  const auto v7 = build_hand(design::dash_v7());
  CHECK(v7.fingers[kIndex].rest_heading == doctest::Approx(90 + 2.9));
  CHECK(v7.fingers[kRing].rest_heading == doctest::Approx(90 - 2.9));
  CHECK(v7.fingers[kThumb].base.y == doctest::Approx(-37));

  auto bad = design::dash_v5();
  bad.palm_width = 120;
  CHECK_THROWS_AS(build_hand(bad), OutOfBoundsDesign);
}

TEST_CASE("episode sampling") {
  const EnvParams params;
  const auto obj = make_object(Shape::Board, 1.0);
  const auto a = make_episode(params, obj, 0.3, 42);
  const auto b = make_episode(params, obj, 0.3, 42);
  CHECK(a.goal.x == b.goal.x);
  CHECK(a.disturbance.direction.x == b.disturbance.direction.x);
  CHECK(a.disturbance.magnitude == 0.3);
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto e = make_episode(params, obj, 1.0, s);
    REQUIRE(norm(e.goal.position()) <= params.goal_radius);
    REQUIRE(e.goal.phi > -180.0);
    REQUIRE(e.goal.phi <= 180.0);
    REQUIRE(norm(e.disturbance.direction) == doctest::Approx(1.0));
  }
  CHECK(make_episode(params, obj, 0.0, 1).goal.x != make_episode(params, obj, 0.0, 2).goal.x);
}

TEST_CASE("reset") {
  const Simulator sim(build_hand(design::dash_v5()), EnvParams{});
  const auto cfg = still_episode(make_object(Shape::Sphere, 1.0), {5, -3, 10});
  const auto s1 = sim.reset(cfg);
  CHECK(s1 == sim.reset(cfg));
  CHECK(s1.hold_counter == 0);
  CHECK(s1.step_count == 0);
  CHECK(s1.object.phi == 10);
  for (double q : s1.joints) CHECK(q == 0.0);

  auto off = cfg;
  off.initial_object_pose = {0, 60, 0};
  CHECK_THROWS_AS(sim.reset(off), InvalidConfig);
  auto dir = cfg;
  dir.disturbance.direction = {1, 1};
  CHECK_THROWS_AS(sim.reset(dir), InvalidConfig);
  auto neg = cfg;
  neg.disturbance.magnitude = -0.1;
  CHECK_THROWS_AS(sim.reset(neg), InvalidConfig);
  auto hz = cfg;
  hz.horizon = 0;
  CHECK_THROWS_AS(sim.reset(hz), InvalidConfig);
  auto nan = cfg;
  nan.goal.x = std::nan("");
  CHECK_THROWS_AS(sim.reset(nan), InvalidConfig);
}

TEST_CASE("quiescence without actuation or disturbance") {
  const Simulator sim(build_hand(design::dash_v5()), EnvParams{});
  int untouched = 0;
  for (const auto& obj : all_instances()) {
    const auto cfg = still_episode(obj, {0, 0, 15}, {30, 0, 0});
    auto s = sim.reset(cfg);
    const auto start = s;
    if (sim.step(s, Action{}, cfg).num_contacts > 0) continue;  // starts pinched
    ++untouched;
    for (int t = 0; t < 50; ++t) s = sim.step(s, Action{}, cfg);
    CHECK(s.object == start.object);
    CHECK(s.joints == start.joints);
    CHECK(s.num_contacts == 0);
    CHECK(s.step_count == 50);
  }
  CHECK(untouched >= 12);
}

TEST_CASE("free object under a constant disturbance") {
  // v = F / c_lin = 0.5 N / 50 N s/m = 0.01 m/s = 10 mm/s; 0.2 mm per 20 ms step.
  const Simulator sim(build_hand(design::dash_v5()), EnvParams{});
  auto cfg = still_episode(make_object(Shape::Sphere, 1.0));
  cfg.disturbance = {0.5, {1.0, 0.0}};
  auto s = sim.reset(cfg);
  for (int t = 1; t <= 5; ++t) {
    s = sim.step(s, Action{}, cfg);
    CHECK(s.object.x == doctest::Approx(0.2 * t).epsilon(1e-12));
    CHECK(s.object.y == 0.0);
  }
}

TEST_CASE("penetration pushes the object away") {
  // Sphere r = 18.75 at (28, 30) overlaps the straight index finger whose base
  // is at (28, 42): distance to the segment is 12, so depth = 7 + 18.75 - 12 =
  // 13.75 mm and f_n = 0.2 N/mm * 13.75 mm = 2.75 N. The object moves
  // 2.75 / 0.05 = 55 mm/s away.
  const Simulator sim(build_hand(design::dash_v5()), EnvParams{});
  const auto cfg = still_episode(make_object(Shape::Sphere, 0.75), {28, 30, 0});
  const auto s = sim.step(sim.reset(cfg), Action{}, cfg);
  REQUIRE(s.num_contacts == 1);
  const auto& c = s.contacts()[0];
  CHECK(c.finger == kIndex);
  CHECK(c.link == 0);
  CHECK(c.normal_force == doctest::Approx(2.75));
  CHECK(c.normal.x == doctest::Approx(0).epsilon(1e-12));
  CHECK(c.normal.y == doctest::Approx(1));
  CHECK(c.tangential_force == doctest::Approx(0).epsilon(1e-12));
  CHECK(s.object.y == doctest::Approx(30 - 1.1));
  CHECK(s.object.x == doctest::Approx(28));
}

TEST_CASE("joint integration and coupling") {
  const Simulator sim(build_hand(design::dash_v5()), EnvParams{});
  const auto cfg = still_episode(make_object(Shape::Pen, 0.75));
  auto s = sim.reset(cfg);
  Action a{};
  a[2] = 1.0;   // index MCP
  a[3] = 0.5;   // index PIP
  a[0] = -1.0;  // thumb MCP toward its lower limit
  s = sim.step(s, a, cfg);
  CHECK(s.joints[3] == doctest::Approx(2.4));   // 120 deg/s * 20 ms
  CHECK(s.joints[4] == doctest::Approx(1.2));
  CHECK(s.joints[5] == doctest::Approx(0.84));  // 0.7 * PIP
  CHECK(s.joints[0] == doctest::Approx(-2.4));
  for (int t = 0; t < 100; ++t) s = sim.step(s, a, cfg);
  CHECK(s.joints[3] == 90.0);
  CHECK(s.joints[0] == -20.0);
}

TEST_CASE("determinism, friction cone and joint limits on random rollouts") {
  const auto bounds = design::DesignBounds::table_defaults();
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    design::DesignVector v{};
    for (std::size_t i = 0; i < design::kDesignDim; ++i) {
      v[i] = rng.uniform(bounds.lower[i], bounds.upper[i]);
    }
    const Simulator sim(build_hand(design::DesignParams::from_vector(v)), EnvParams{});
    const auto objs = all_instances();
    const auto cfg = make_episode(sim.params(), objs[rng.index(objs.size())],
                                  rng.uniform(0, 1), rng.engine()());
    std::vector<Action> actions(200);
    for (auto& a : actions) a = random_action(rng);

    auto s1 = sim.reset(cfg);
    auto s2 = sim.reset(cfg);
    int contacts_seen = 0;
    for (const auto& a : actions) {
      s1 = sim.step(s1, a, cfg);
      s2 = sim.step(s2, a, cfg);
      REQUIRE(s1 == s2);
      for (int j = 0; j < kNumJoints; ++j) {
        const auto& lim = kJointLimits[j % 3];
        REQUIRE(s1.joints[j] >= lim.lo);
        REQUIRE(s1.joints[j] <= lim.hi);
      }
      for (const auto& c : s1.contacts()) {
        REQUIRE(c.normal_force >= 0.0);
        REQUIRE(std::abs(c.tangential_force) <= sim.params().physics.friction * c.normal_force + 1e-9);
        ++contacts_seen;
      }
    }
    CHECK(contacts_seen >= 0);
  }
}

TEST_CASE("success predicate") {
  const auto obj = make_object(Shape::Board, 1.0);
  EpisodeConfig cfg = still_episode(obj, {}, {0, 0, 0});
  SimState s;
  s.object = {3, 4, 3};  // 5 mm, 3 deg
  s.num_contacts = 2;
  s.contact_buf[0].finger = kThumb;
  s.contact_buf[0].normal_force = 1.0;
  s.contact_buf[1].finger = kIndex;
  s.contact_buf[1].normal_force = 1.0;
  s.hold_counter = 10;
  CHECK(is_success(s, cfg, 10, 10, 10));

  auto far = s;
  far.object = {9, 12, 3};  // 15 mm
  CHECK_FALSE(is_success(far, cfg, 10, 10, 10));

  auto one = s;
  one.contact_buf[1].finger = kThumb;  // two contacts, one finger
  CHECK_FALSE(is_success(one, cfg, 10, 10, 10));

  auto short_hold = s;
  short_hold.hold_counter = 9;
  CHECK_FALSE(is_success(short_hold, cfg, 10, 10, 10));

  // Tightening tolerances never turns a failure into a success.
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    auto r = s;
    r.object = {rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-30, 30)};
    const double tp = rng.uniform(0, 20), ta = rng.uniform(0, 20);
    const double sp = rng.uniform(0, tp), sa = rng.uniform(0, ta);
    if (is_success(r, cfg, sp, sa, 10)) REQUIRE(is_success(r, cfg, tp, ta, 10));
  }
}

TEST_CASE("reward") {
  const RewardWeights w;
  CHECK(reward_terms(w, 0, 0, 2, true) == doctest::Approx(5.1));
  CHECK(reward_terms(w, 100, 180, 0, false) == doctest::Approx(-1.5));
  CHECK(reward_terms(w, 100, -180, 1, false) == doctest::Approx(-1.5));
  CHECK(reward_terms(w, 1000, 0, 0, false) == doctest::Approx(-2.0));  // capped

  // Translation invariance.
  const EnvParams params;
  const auto obj = make_object(Shape::Pen, 1.0);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    SimState s;
    s.object = {rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-180, 180)};
    auto cfg = still_episode(obj, {}, {rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-180, 180)});
    const double r0 = reward(s, Action{}, cfg, params);
    const Vec2 shift{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    s.object.x += shift.x;
    s.object.y += shift.y;
    cfg.goal.x += shift.x;
    cfg.goal.y += shift.y;
    REQUIRE(reward(s, Action{}, cfg, params) == doctest::Approx(r0).epsilon(1e-12));
  }
}

TEST_CASE("observation layout") {
  const Simulator sim(build_hand(design::dash_v5()), EnvParams{});
  const auto obj = make_object(Shape::Ring, 1.25);
  const auto cfg = still_episode(obj, {10, -20, 0}, {40, 10, 30});
  const auto s = sim.reset(cfg);
  const auto o = sim.observe(s, cfg);
  CHECK(o[0] == doctest::Approx(2.0 * 20.0 / 110.0 - 1.0));  // MCP 0 within [-20, 90]
  CHECK(o[1] == doctest::Approx(-1.0));                      // PIP 0 at its lower limit
  CHECK(o[12] == doctest::Approx(0.3));
  CHECK(o[13] == doctest::Approx(0.3));
  CHECK(o[14] == 0.0);  // ring: continuous symmetry
  CHECK(o[15] == doctest::Approx(0.1));
  CHECK(o[16] == doctest::Approx(-0.2));
  double hot = 0.0;
  for (int i = 18; i < kObsDim; ++i) hot += o[i];
  CHECK(hot == 1.0);
  CHECK(o[18 + obj.one_hot_index] == 1.0);
}

TEST_CASE("trajectory format") {
  std::ostringstream out;
  write_trajectory_header(out);
  CHECK(out.str() ==
        "t,q0,q1,q2,q3,q4,q5,q6,q7,q8,q9,q10,q11,obj_x,obj_y,obj_phi,n_contacts,reward\n");
  std::ostringstream row;
  SimState s;
  s.object = {1.5, -2, 30};
  write_trajectory_row(row, 7, s, -0.25);
  CHECK(row.str() == "7,0,0,0,0,0,0,0,0,0,0,0,0,1.5,-2,30,0,-0.25\n");
}
