#include <gtest/gtest.h>

#include "grwf/rng.hpp"
#include "grwf/stats.hpp"

using namespace grwf;

namespace {
std::vector<double> uniforms(Rng& r, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.uniform();
  return v;
}
std::vector<double> exponentials(Rng& r, int n, double mean) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.exponential(mean);
  return v;
}
}  // namespace

TEST(Stats, KolmogorovTailMatchesKnownValues) {
  // Q_KS(1.36) ~ 0.049, Q_KS(1.63) ~ 0.010
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0495, 5e-4);
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 3e-4);
  // both series agree where they meet
  EXPECT_NEAR(kolmogorov_q(0.3 - 1e-12), kolmogorov_q(0.3 + 1e-12), 1e-9);
}

TEST(Stats, IdenticalSamplesGiveZeroStatistic) {
  Rng r = Rng::stream(1, 0, Purpose::Test);
  auto a = uniforms(r, 1000);
  auto t = ks_two_sample(a, a);
  EXPECT_EQ(t.statistic, 0.0);
  EXPECT_EQ(t.p_value, 1.0);
  std::vector<Point2> p;
  for (size_t i = 0; i + 1 < a.size(); i += 2) p.push_back({a[i], a[i + 1]});
  EXPECT_EQ(ks_2d_two_sample(p, p).statistic, 0.0);
}

TEST(Stats, UniformCalibration) {
  int pass = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng r1 = Rng::stream(10, rep, Purpose::Test), r2 = Rng::stream(11, rep, Purpose::Test);
    if (ks_two_sample(uniforms(r1, 10000), uniforms(r2, 10000)).p_value > 0.01) ++pass;
  }
  EXPECT_GE(pass, 98);
}

TEST(Stats, ExponentialPower) {
  Rng r1 = Rng::stream(3, 0, Purpose::Test), r2 = Rng::stream(3, 1, Purpose::Test);
  EXPECT_LT(ks_two_sample(exponentials(r1, 10000, 1.0), exponentials(r2, 10000, 2.0)).p_value, 1e-6);
}

TEST(Stats, OneSampleAgainstExactCdf) {
  int pass = 0;
  for (int rep = 0; rep < 50; ++rep) {
    Rng r = Rng::stream(4, rep, Purpose::Test);
    auto x = exponentials(r, 2000, 1.5);
    if (ks_one_sample(x, [](double v) { return 1 - std::exp(-v / 1.5); }).p_value > 0.01) ++pass;
  }
  EXPECT_GE(pass, 47);
}

TEST(Stats, TwoDimensionalCalibrationAndPower) {
  int pass = 0;
  for (int rep = 0; rep < 40; ++rep) {
    Rng r1 = Rng::stream(5, rep, Purpose::Test), r2 = Rng::stream(6, rep, Purpose::Test);
    std::vector<Point2> a, b;
    for (int k = 0; k < 2000; ++k) {
      const double u = r1.normal();
      a.push_back({u, 0.5 * u + r1.normal()});
      const double v = r2.normal();
      b.push_back({v, 0.5 * v + r2.normal()});
    }
    if (ks_2d_two_sample(a, b).p_value > 0.01) ++pass;
  }
  EXPECT_GE(pass, 37);
  // different correlation, same marginals in x
  Rng r1 = Rng::stream(7, 0, Purpose::Test), r2 = Rng::stream(7, 1, Purpose::Test);
  std::vector<Point2> a, b;
  for (int k = 0; k < 5000; ++k) {
    const double u = r1.normal();
    a.push_back({u, u + 0.3 * r1.normal()});
    b.push_back({r2.normal(), r2.normal()});
  }
  EXPECT_LT(ks_2d_two_sample(a, b).p_value, 1e-6);
}

TEST(Stats, ChiSquaredAndBins) {
  Rng r = Rng::stream(8, 0, Purpose::Test);
  auto x = exponentials(r, 10000, 1.0);
  const auto edges = equal_mass_edges([](double q) { return -std::log(1 - q); }, 10);
  std::vector<double> counts(10, 0), probs(10, 0.1);
  for (double v : x) counts[bin_of(edges, v)] += 1;
  EXPECT_GT(chi2_goodness_of_fit(counts, probs).p_value, 0.01);
  std::vector<double> skew(10, 0.1);
  skew[0] = 0.12;
  skew[9] = 0.08;
  EXPECT_LT(chi2_goodness_of_fit(counts, skew).p_value, 1e-6);
  EXPECT_NEAR(chi2_sf(3.84, 1), 0.05, 1e-3);
}

TEST(Stats, InsufficientSamples) {
  std::vector<double> a(50, 1.0), b(500, 1.0);
  try {
    ks_two_sample(a, b);
    FAIL();
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSamples);
  }
}

TEST(Stats, MutualInformation) {
  Rng r = Rng::stream(9, 0, Purpose::Test);
  std::vector<Point2> ind, dep;
  for (int k = 0; k < 10000; ++k) {
    ind.push_back({r.normal(), r.normal()});
    const double u = r.normal();
    dep.push_back({u, u + 0.5 * r.normal()});
  }
  const double mi0 = mutual_information(ind, 10), mi1 = mutual_information(dep, 10);
  EXPECT_LT(mi0, 0.01);
  EXPECT_GT(mi1, 0.5);
}
