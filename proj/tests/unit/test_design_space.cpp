#include <cmath>

#include "doctest.h"
#include "handopt/design_space.hpp"

using namespace handopt;
using namespace handopt::design;

namespace {

DesignParams lower_design(const DesignBounds& b) { return DesignParams::from_vector(b.lower); }
DesignParams upper_design(const DesignBounds& b) { return DesignParams::from_vector(b.upper); }

DesignParams random_design(const DesignBounds& b, Rng& rng) {
  DesignVector v{};
  for (std::size_t i = 0; i < kDesignDim; ++i) v[i] = rng.uniform(b.lower[i], b.upper[i]);
  return DesignParams::from_vector(v);
}

}  // namespace

TEST_CASE("flat vector round trip keeps field order") {
  const auto v7 = dash_v7();
  const auto v = v7.to_vector();
  CHECK(v[0] == 92);
  CHECK(v[1] == 74);
  CHECK(v[2] == 29);
  CHECK(v[3] == 83);
  CHECK(v[8] == doctest::Approx(2.9));
  CHECK(v[10] == doctest::Approx(-2.9));
  CHECK(v[13] == 35);
  CHECK(DesignParams::from_vector(v) == v7);
  CHECK(field_names()[0] == "palm_width");
  CHECK(field_names()[13] == "distal_len");
}

TEST_CASE("table bounds") {
  const auto b = DesignBounds::table_defaults();
  CHECK_NOTHROW(b.validate());
  CHECK(b.lower[0] == 69);
  CHECK(b.upper[0] == 99);
  CHECK(b.lower[12] == 8);
  CHECK(b.upper[12] == 28);
  CHECK(b.mutation_range[0] == doctest::Approx(1.5));
  for (const auto& d : {dash_v3(), dash_v5(), dash_v6(), dash_v7()}) CHECK(b.contains(d));

  auto bad = b;
  bad.lower[3] = bad.upper[3];
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = b;
  bad.mutation_range[0] = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("crossover") {
  const auto b = DesignBounds::table_defaults();
  Rng rng(7);
  SUBCASE("identical parents") {
    const auto t = dash_v6();
    CHECK(crossover(t, t, rng) == t);
  }
  SUBCASE("membership for the bound corners") {
    const auto lo = lower_design(b);
    const auto hi = upper_design(b);
    const auto c = crossover(lo, hi, rng).to_vector();
    for (std::size_t i = 0; i < kDesignDim; ++i) {
      CHECK((c[i] == b.lower[i] || c[i] == b.upper[i]));
    }
  }
  SUBCASE("shared v3 and v5 values survive") {
    const auto a = dash_v3().to_vector();
    const auto bb = dash_v5().to_vector();
    for (int trial = 0; trial < 50; ++trial) {
      const auto c = crossover(dash_v3(), dash_v5(), rng).to_vector();
      for (std::size_t i = 0; i < kDesignDim; ++i) {
        if (a[i] == bb[i]) CHECK(c[i] == a[i]);
      }
      CHECK(c[0] == 84);
    }
  }
  SUBCASE("both parents contribute about half the genes") {
    const auto lo = lower_design(b);
    const auto hi = upper_design(b);
    int from_lo = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
      const auto c = crossover(lo, hi, rng).to_vector();
      for (std::size_t i = 0; i < kDesignDim; ++i) from_lo += c[i] == b.lower[i];
    }
    const double frac = static_cast<double>(from_lo) / (trials * kDesignDim);
    CHECK(frac == doctest::Approx(0.5).epsilon(0.03));
  }
}

TEST_CASE("mutate") {
  auto b = DesignBounds::table_defaults();
  Rng rng(11);
  const auto t = dash_v5();
  SUBCASE("zero range is the identity") {
    b.mutation_range.fill(0.0);
    CHECK(mutate(t, b, rng) == t);
  }
  SUBCASE("support") {
    const auto base = t.to_vector();
    double max_palm = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const auto m = mutate(t, b, rng).to_vector();
      for (std::size_t i = 0; i < kDesignDim; ++i) {
        REQUIRE(std::abs(m[i] - base[i]) <= b.mutation_range[i]);
      }
      max_palm = std::max(max_palm, std::abs(m[0] - base[0]));
    }
    CHECK(max_palm <= 1.5);
    CHECK(max_palm > 1.4);  // the support is actually used
  }
  SUBCASE("does not clamp") {
    const auto lo = lower_design(b);
    bool below = false;
    for (int trial = 0; trial < 100 && !below; ++trial) {
      below = mutate(lo, b, rng).palm_width < b.lower[0];
    }
    CHECK(below);
  }
}

TEST_CASE("clamp") {
  const auto b = DesignBounds::table_defaults();
  auto t = dash_v5();
  t.palm_width = 120;
  t.middle_len = 5;
  const auto c = clamp(t, b);
  CHECK(c.palm_width == 99);
  CHECK(c.middle_len == 8);
  CHECK(clamp(c, b) == c);
  CHECK(clamp(dash_v7(), b) == dash_v7());
}

TEST_CASE("normalized distance") {
  const auto b = DesignBounds::table_defaults();
  const auto lo = lower_design(b);
  const auto hi = upper_design(b);
  CHECK(normalized_distance(lo, lo, b) == 0.0);
  CHECK(normalized_distance(lo, hi, b) == doctest::Approx(std::sqrt(14.0)));
  CHECK(normalized_distance(dash_v5(), dash_v7(), b) == doctest::Approx(0.496).epsilon(1e-3));

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_design(b, rng);
    const auto y = random_design(b, rng);
    const auto z = random_design(b, rng);
    REQUIRE(normalized_distance(x, y, b) == normalized_distance(y, x, b));
    REQUIRE(normalized_distance(x, z, b) <=
            normalized_distance(x, y, b) + normalized_distance(y, z, b) + 1e-12);
    REQUIRE(normalized_distance(x, y, b) > 0.0);
  }
}

TEST_CASE("interpolation step") {
  const auto b = DesignBounds::table_defaults();
  SUBCASE("zero distance") {
    CHECK_THROWS_AS(interp_step(dash_v5(), dash_v5(), 0.1, b), ZeroDistance);
  }
  SUBCASE("one step shrinks the distance by xi") {
    const double d0 = normalized_distance(dash_v5(), dash_v7(), b);
    const auto s = interp_step(dash_v5(), dash_v7(), 0.1, b);
    CHECK(normalized_distance(s, dash_v7(), b) == doctest::Approx(d0 - 0.1).epsilon(1e-12));
    CHECK(normalized_distance(dash_v5(), s, b) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s.palm_width > 84);
    CHECK(s.palm_width < 92);
  }
  SUBCASE("palm width approaches v7 without passing it") {
    auto cur = dash_v5();
    double prev = cur.palm_width;
    while (!(cur == dash_v7())) {
      cur = interp_step(cur, dash_v7(), 0.1, b);
      CHECK(cur.palm_width >= prev);
      CHECK(cur.palm_width <= 92);
      prev = cur.palm_width;
    }
    CHECK(cur.palm_width == 92);
  }
  SUBCASE("0.95 takes ten steps, the last of 0.05") {
    // Move only the first coordinate so d0 is exact: 0.95 of the 30 mm span.
    auto target = lower_design(b);
    target.palm_width = b.lower[0] + 0.95 * 30.0;
    auto cur = lower_design(b);
    const double d0 = normalized_distance(cur, target, b);
    CHECK(d0 == doctest::Approx(0.95));
    int calls = 0;
    double last = 0.0;
    while (!(cur == target)) {
      const auto next = interp_step(cur, target, 0.1, b);
      last = normalized_distance(cur, next, b);
      cur = next;
      ++calls;
      REQUIRE(calls <= 10);
    }
    CHECK(calls == 10);
    CHECK(last == doctest::Approx(0.05).epsilon(1e-9));
  }
  SUBCASE("step larger than the distance lands on the target") {
    CHECK(interp_step(dash_v5(), dash_v7(), 5.0, b) == dash_v7());
  }
}
