#include <gtest/gtest.h>

#include <cmath>

#include "grwf/rng.hpp"
#include "grwf/spacetime.hpp"

using namespace grwf;

TEST(Spacetime, TimelikeDistanceExamples) {
  EXPECT_DOUBLE_EQ(timelike_distance(point(0, 0), point(5, 3)), 4.0);
  EXPECT_DOUBLE_EQ(timelike_distance(point(0, 0), point(2.5, 0)), 2.5);
  try {
    timelike_distance(point(0, 0), point(1, 2));
    FAIL();
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SpacelikeSeparated);
  }
  EXPECT_THROW(timelike_distance(point(0, 0), point(-1, 0)), SimulationError);
}

TEST(Spacetime, InFutureExamples) {
  EXPECT_TRUE(in_future(point(0, 0), point(0, 0)));
  EXPECT_TRUE(in_future(point(0, 0), point(1, 1)));
  EXPECT_FALSE(in_future(point(0, 0), point(-1, 0)));
}

TEST(Spacetime, EmbedExamples) {
  Hyperboloid h(point(0, 0), 1.0);
  EXPECT_EQ(embed(h, 0.0), point(1, 0));
  Hyperboloid h2(point(0, 0), 2.0);
  const auto p = embed(h2, 0.5);
  EXPECT_DOUBLE_EQ(p.t, 2 * std::cosh(0.5));
  EXPECT_DOUBLE_EQ(p.x[0], 2 * std::sinh(0.5));
  for (double eta : {-1.0, 0.3, 2.0})
    for (double chi : {-0.7, 0.0, 1.3}) {
      const auto a = boost(embed(h2, chi), eta);
      const auto b = embed(boost(h2, eta), chi + eta);
      EXPECT_NEAR(a.t, b.t, 1e-12 * std::abs(a.t));
      EXPECT_NEAR(a.x[0], b.x[0], 1e-12 * (1 + std::abs(a.x[0])));
    }
}

TEST(Spacetime, SurfaceDistance) {
  Hyperboloid h(point(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(surface_distance(h, 0.5, -0.5), 2.0);
  EXPECT_DOUBLE_EQ(surface_distance(h, 0.2, 0.2), 0.0);
  // flat limit near the apex
  Hyperboloid big(point(0, 0), 1e3);
  const double d = surface_distance(big, rapidity_of(big, -0.5), rapidity_of(big, 0.5));
  EXPECT_NEAR(d, 1.0, 1e-4);
}

TEST(Spacetime, BoostExamples) {
  for (double eta : {-0.4, 0.0, 1.1}) {
    const auto p = boost(point(1, 0), eta);
    EXPECT_DOUBLE_EQ(p.t, std::cosh(eta));
    EXPECT_DOUBLE_EQ(p.x[0], std::sinh(eta));
  }
  EXPECT_EQ(boost(point(0.3, -2.0), 0.0), point(0.3, -2.0));
}

TEST(SpacetimeProperty, RandomizedInvariants) {
  auto g = Philox4x64::stream(11, 0, Purpose::Test);
  for (int i = 0; i < 2000; ++i) {
    const auto x = point(4 * g.uniform() - 2, 4 * g.uniform() - 2);
    const double r = 0.01 + 10 * g.uniform();
    const double chi = 12 * g.uniform() - 6;
    Hyperboloid h(x, r);
    const auto y = embed(h, chi);
    EXPECT_NEAR(timelike_distance(x, y), r, 1e-10 * r * std::cosh(chi));
    // boost invariance of the interval
    const double eta = 2 * g.uniform() - 1;
    const auto z = point(y.t + 3 * g.uniform(), y.x[0] + g.uniform() - 0.5);
    if (in_future(x, z)) {
      const double d0 = timelike_distance(x, z);
      const auto bx = boost(x, eta), bz = boost(z, eta);
      ASSERT_TRUE(in_future(bx, bz) || d0 < 1e-9);
      if (d0 > 1e-3) EXPECT_NEAR(timelike_distance(bx, bz), d0, 1e-9 * (1 + std::abs(z.t) + std::abs(z.x[0])));
    }
    // triangle inequality along the surface
    const double c1 = 6 * g.uniform() - 3, c2 = 6 * g.uniform() - 3, c3 = 6 * g.uniform() - 3;
    EXPECT_LE(surface_distance(h, c1, c3), surface_distance(h, c1, c2) + surface_distance(h, c2, c3) + 1e-12);
  }
}

TEST(SpacetimeProperty, CausalOrderIsPartialOrder) {
  auto g = Philox4x64::stream(12, 0, Purpose::Test);
  std::vector<SpacetimePoint> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(point(3 * g.uniform(), 3 * g.uniform()));
  for (auto& a : pts) {
    EXPECT_TRUE(in_future(a, a));
    for (auto& b : pts) {
      if (in_future(a, b) && in_future(b, a)) EXPECT_EQ(a, b);
      for (auto& c : pts)
        if (in_future(a, b) && in_future(b, c)) EXPECT_TRUE(in_future(a, c));
    }
  }
}
