#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "grwf/analysis.hpp"
#include "grwf/suites.hpp"

using namespace grwf;

namespace {

std::vector<double> exp_sample(std::uint64_t seed, std::uint64_t k, size_t n, double mean) {
  auto g = Philox4x64::stream(seed, k, Purpose::Test);
  std::vector<double> v(n);
  for (auto& x : v) x = g.exponential(mean);
  return v;
}

}  // namespace

TEST(Analysis, IdenticalSamplesGiveZeroDistance) {
  const auto a = exp_sample(1, 0, 500, 1.0);
  const TestReport r = compare_distributions("self", a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(Analysis, DifferentScalesAreRejected) {
  const TestReport ks = compare_distributions("ks", exp_sample(2, 0, 2000, 1.0), exp_sample(2, 1, 2000, 2.0));
  EXPECT_LT(ks.p_value, 1e-6);
  const TestReport c2 =
      compare_distributions("chi2", exp_sample(2, 2, 2000, 1.0), exp_sample(2, 3, 2000, 2.0), Method::Chi2);
  EXPECT_LT(c2.p_value, 1e-6);
  EXPECT_FALSE(c2.pass);
}

TEST(Analysis, TooFewSamplesAreRefused) {
  EXPECT_THROW(compare_distributions("few", exp_sample(3, 0, 20, 1.0), exp_sample(3, 1, 20, 1.0)), SimulationError);
}

TEST(Analysis, StatisticalTestsRejectAtTheirNominalRate) {
  // model against itself with independent seeds: at most 3 rejections in 100 at p = 0.01
  int ks = 0, c2 = 0, one = 0;
  for (int k = 0; k < 100; ++k) {
    const auto a = exp_sample(10, 2 * k, 1000, 1.0), b = exp_sample(10, 2 * k + 1, 1000, 1.0);
    ks += !compare_distributions("ks", a, b).pass;
    c2 += !compare_distributions("chi2", a, b, Method::Chi2).pass;
    one += !compare_to_cdf("cdf", a, [](double x) { return -std::expm1(-x); }).pass;
  }
  EXPECT_LE(ks, 3);
  EXPECT_LE(c2, 3);
  EXPECT_LE(one, 3);
}

TEST(Analysis, GrwModelAgainstItselfRejectsAtTheNominalRate) {
  auto g = make_grid(64, 128);
  const GrwModel<SchrodingerParticle> grw({SchrodingerParticle(1.0)}, 10, 1);
  const auto psi = MultiTimeState<ScalarField>::product({gaussian_scalar(g, 0, 0, 2)});
  typename GrwModel<SchrodingerParticle>::RunOptions ro;
  ro.mode = GrwMode::Generation;
  auto sample = [&](std::uint64_t seed) {
    std::vector<double> x;
    for (int k = 0; k < 200; ++k) x.push_back(grw.run(psi, 0.0, ro, seed, k).flashes[0][0].point.x[0]);
    return x;
  };
  int rejected = 0;
  for (int k = 0; k < 100; ++k) rejected += !compare_distributions("grw", sample(1000 + 2 * k), sample(1001 + 2 * k)).pass;
  EXPECT_LE(rejected, 3);
}

TEST(Analysis, ExactBinsCoverTheFirstFlashDistribution) {
  auto g = make_grid(32, 64);
  PovmLabel l;
  l.grid = g;
  l.mass = 5;
  PovmOptions po;
  po.r_floor = FlashModel({DiracParticle(5)}, 10, 1).r_floor();
  const PovmEngine e({l}, 10, 1, po);
  const suites::ExactBins b = suites::exact_first_flash_bins(e, dirac_packet(g, 5, 0, 2), 3, 4);
  double s = 0;
  for (double p : b.probs) {
    EXPECT_GT(p, 0);
    s += p;
  }
  EXPECT_NEAR(s, 1.0, 1e-3);
  // every dT row carries one third of the waiting mass
  for (int r = 0; r < 3; ++r) {
    double row = 0;
    for (int c = 0; c < 4; ++c) row += b.probs[r * 4 + c];
    EXPECT_NEAR(row, 1.0 / 3, 1e-3) << r;
  }
}

TEST(Analysis, ReportsAreReproducibleUnderIdenticalSeeds) {
  DeskParams p;
  p.samples = 200;
  p.seed = 77;
  const auto a = covariance_test(p, 0.3), b = covariance_test(p, 0.3);
  ASSERT_EQ(a.size(), b.size());
  for (size_t k = 0; k < a.size(); ++k) EXPECT_EQ(to_json(a[k]).dump(), to_json(b[k]).dump());
}

TEST(Analysis, WorkerCountDoesNotChangeSamples) {
  DeskParams p;
  auto g = make_grid(p.L, p.M);
  const FlashModel m({DiracParticle(p.mass)}, p.tau, p.a);
  const auto psi = MultiTimeState<SpinorField>::product({dirac_packet(g, p.mass, 0, p.width)});
  const SampleSet a = first_flashes(m, psi, {point(0, 0)}, 60, 5, 1), b = first_flashes(m, psi, {point(0, 0)}, 60, 5, 3);
  EXPECT_EQ(a.t[0], b.t[0]);
  EXPECT_EQ(a.x[0], b.x[0]);
}

TEST(Analysis, SuiteNamesCoverEveryCriterion) {
  std::set<int> seen;
  for (const auto& c : criteria()) {
    EXPECT_TRUE(valid_suite(c.suite)) << c.suite;
    seen.insert(c.id);
  }
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_FALSE(valid_suite("povms"));
}
