#include <set>
#include <variant>

#include "doctest.h"
#include "handopt/objects.hpp"

using namespace handopt;
using namespace handopt::env;

TEST_CASE("sphere instances are scaled discs") {
  const ObjectSizes sizes;
  const auto s1 = make_object(Shape::Sphere, 1.0);
  REQUIRE(s1.primitives.size() == 1);
  CHECK(std::get<Disc>(s1.primitives[0]).radius == sizes.sphere_radius);
  const auto s125 = make_object(Shape::Sphere, 1.25);
  CHECK(std::get<Disc>(s125.primitives[0]).radius == doctest::Approx(1.25 * sizes.sphere_radius));
  CHECK(s1.name() == "sphere@1.0");
}

TEST_CASE("canonical decompositions") {
  CHECK(std::holds_alternative<Rect>(make_object(Shape::Board, 1.0).primitives.at(0)));
  CHECK(std::holds_alternative<Rect>(make_object(Shape::Pen, 1.0).primitives.at(0)));
  const auto cross = make_object(Shape::Cross3d, 1.0);
  REQUIRE(cross.primitives.size() == 2);
  CHECK(std::get<Rect>(cross.primitives[1]).angle == 90.0);
  const auto barbell = make_object(Shape::Barbell, 1.0);
  int discs = 0, rects = 0;
  for (const auto& p : barbell.primitives) {
    discs += std::holds_alternative<Disc>(p);
    rects += std::holds_alternative<Rect>(p);
  }
  CHECK(discs == 2);
  CHECK(rects == 1);
  CHECK(std::holds_alternative<Annulus>(make_object(Shape::Ring, 1.0).primitives.at(0)));
}

TEST_CASE("eighteen distinct instances") {
  const auto all = all_instances();
  REQUIRE(all.size() == 18);
  std::set<int> ids;
  for (const auto& o : all) {
    ids.insert(o.one_hot_index);
    CHECK(o.one_hot_index == 3 * static_cast<int>(o.shape) + scale_index(o.scale));
    CHECK(o.mass > 0.0);
  }
  CHECK(ids.size() == 18);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == 17);
}

TEST_CASE("instance parsing") {
  CHECK(parse_instance("board@0.75").one_hot_index == instance_index(Shape::Board, 0.75));
  CHECK(parse_instances("all").size() == 18);
  const auto two = parse_instances("sphere@1.0, board@1.0");
  REQUIRE(two.size() == 2);
  CHECK(two[1].shape == Shape::Board);
  CHECK_THROWS_AS(parse_instance("cube@1.0"), UnknownShape);
  CHECK_THROWS_AS(parse_instance("sphere@2.0"), UnknownScale);
  CHECK_THROWS_AS(parse_instance("sphere"), UnknownShape);
  CHECK_THROWS_AS(make_object(Shape::Pen, 0.5), UnknownScale);
}

TEST_CASE("signed distance examples") {
  SUBCASE("disc") {
    const auto q = primitive_distance(Disc{{0, 0}, 20}, {50, 0});
    CHECK(q.distance == doctest::Approx(30));
    CHECK(q.normal.x == doctest::Approx(1));
    CHECK(q.normal.y == doctest::Approx(0));
  }
  SUBCASE("annulus interior") {
    const Annulus ring{{0, 0}, 30, 8};
    CHECK(primitive_distance(ring, {30, 0}).distance == doctest::Approx(-4));
    CHECK(primitive_distance(ring, {0, 0}).distance == doctest::Approx(26));
    CHECK(primitive_distance(ring, {0, 40}).distance == doctest::Approx(6));
  }
  SUBCASE("rectangle edge and outside corner") {
    const Rect r{{0, 0}, 40, 25, 0};
    CHECK(primitive_distance(r, {40, 3}).distance == doctest::Approx(0).epsilon(1e-12));
    CHECK(primitive_distance(r, {0, -25}).distance == doctest::Approx(0).epsilon(1e-12));
    CHECK(primitive_distance(r, {43, 29}).distance == doctest::Approx(5));
    CHECK(primitive_distance(r, {0, 0}).distance == doctest::Approx(-25));
  }
  SUBCASE("union takes the minimum") {
    const auto barbell = make_object(Shape::Barbell, 1.0);
    // Point at the centre of the right disc.
    CHECK(signed_distance(barbell, {}, {25, 0}).distance == doctest::Approx(-15));
  }
  SUBCASE("pose transform") {
    const auto pen = make_object(Shape::Pen, 1.0);
    const Pose2 pose{10, 5, 90};
    // Rotated by 90 degrees the long axis is along y.
    CHECK(signed_distance(pen, pose, {10, 55}).distance == doctest::Approx(0).epsilon(1e-9));
    const auto q = signed_distance(pen, pose, {20, 5});
    CHECK(q.distance == doctest::Approx(6));
    CHECK(q.normal.x == doctest::Approx(1));
  }
}

TEST_CASE("signed distance scales linearly") {
  Rng rng(5);
  for (Shape s : kAllShapes) {
    const auto base = make_object(s, 1.0);
    for (double sc : {0.75, 1.25}) {
      const auto scaled = make_object(s, sc);
      for (int i = 0; i < 200; ++i) {
        const Vec2 p{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        const double d1 = signed_distance(base, {}, p).distance;
        const double d2 = signed_distance(scaled, {}, sc * p).distance;
        REQUIRE(d2 == doctest::Approx(sc * d1).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("symmetry-aware angle error") {
  CHECK(symmetric_angle_error(170, -170, 1) == doctest::Approx(-20));
  CHECK(symmetric_angle_error(90, 0, 0) == 0.0);            // continuous symmetry
  CHECK(symmetric_angle_error(180, 0, 2) == doctest::Approx(0).epsilon(1e-12));
  CHECK(symmetric_angle_error(100, 0, 2) == doctest::Approx(-80));
  CHECK(symmetric_angle_error(95, 0, 4) == doctest::Approx(5));
  CHECK(symmetric_angle_error(45, 0, 4) == doctest::Approx(45));
}
