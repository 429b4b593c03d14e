#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "grwf/povm.hpp"
#include "grwf/stats.hpp"
#include "grwf/temporal.hpp"

using namespace grwf;

namespace {

constexpr double kTau = 10.0, kA = 1.0, kMass = 5.0;
using State = MultiTimeState<SpinorField>;

SpinorField packet(GridPtr g, double x0, double w = 2.0, double k0 = 0.0, double t = 0.0) {
  return normalized(positive_energy_project(gaussian_spinor(g, t, x0, w, k0), kMass));
}

TemporalModel model1(double tau = kTau, TemporalOptions o = {}) {
  return TemporalModel(FlashModel({DiracParticle(kMass)}, tau, kA), o);
}

}  // namespace

TEST(Temporal, RateDoesNotDependOnNormalization) {
  auto g = make_grid(64, 128);
  TemporalModel m = model1();
  State psi = State::product({packet(g, 0)});
  const std::vector<SpacetimePoint> X{point(0, 0)};
  for (auto y : {point(4, 1), point(9, -3), point(2, 1.9)}) {
    const double r1 = m.temporal_rate(psi, X, 0, y, 1.0);
    const double r2 = m.temporal_rate(psi, X, 0, y, 2.0);
    EXPECT_NEAR(r2 / r1, 1.0, 1e-12);
  }
}

TEST(Temporal, RateIsTheLogDerivativeOfTheNoFlashWeight) {
  auto g = make_grid(64, 128);
  TemporalModel m = model1();
  State psi = State::product({packet(g, 0)});
  const std::vector<SpacetimePoint> X{point(0, 0)};
  for (double t : {1.0, 5.0, 20.0}) {
    const double h = 1e-3;
    const double dp = m.no_flash_weight(psi, X, t + h), dm = m.no_flash_weight(psi, X, t - h);
    const double d = m.no_flash_weight(psi, X, t);
    const double L = m.total_rate(psi, X, t);
    EXPECT_NEAR(-(dp - dm) / (2 * h) / d / L, 1.0, 1e-4) << t;
  }
}

TEST(Temporal, SliceIntegralOfThePointRateIsTheTotalRate) {
  auto g = make_grid(64, 128);
  TemporalModel m = model1();
  State psi = State::product({packet(g, 1, 1.5, 0.5)});
  const std::vector<SpacetimePoint> X{point(0, 0)};
  const double t = 6.0;
  // trapezoid in u over the part of the slice carrying the packet and its light-cone images
  double s = 0;
  const int n = 6000;
  for (int k = 1; k < n; ++k) {
    const double th = -0.5 * M_PI + M_PI * k / n;
    const double u = t * std::sin(th);
    s += m.temporal_rate(psi, X, 0, point(t, u)) * t * std::cos(th) * M_PI / n;
  }
  EXPECT_NEAR(s / m.total_rate(psi, X, t), 1.0, 2e-3);
}

TEST(Temporal, NoFlashWeightMatchesTheExactSurfaceProbability) {
  auto g = make_grid(32, 64);
  TemporalModel m = model1();
  PovmLabel l;
  l.grid = g;
  l.mass = kMass;
  PovmOptions po;
  po.r_floor = m.r_floor();
  PovmEngine e({l}, kTau, kA, po);
  State psi = State::product({packet(g, 0)});
  for (double t : {2.0, 8.0}) {
    const double a = m.no_flash_weight(psi, {point(0, 0)}, t);
    const double b = e.prob_up_to_surface(psi, {point(0, 0)}, {{}}, {t});
    EXPECT_NEAR(a, b, 1e-4) << t;
    EXPECT_GT(a, std::exp(-t / kTau));
  }
}

TEST(Temporal, LowVelocityRateIsTheGrwRate) {
  const double tau = 1000, R = 500;
  auto g = make_grid(64, 128);
  TemporalModel m = model1(tau);
  const SpinorField f = packet(g, 0, 2.0, 0.0, -R);
  State psi = State::product({f});
  const std::vector<SpacetimePoint> X{point(-R, 0)};
  const SpinorField now = DiracParticle(kMass).propagate(f, 0.0);
  for (double x : {-1.0, 0.0, 2.5}) {
    SpinorField j = now;
    for (int k = 0; k < g->M; ++k)
      for (int c = 0; c < 2; ++c) j.at(c, k) *= gaussian_jump_factor(g->wrap(x - g->x(k)), kA);
    const double grw = plane_norm2(j) / tau;
    EXPECT_NEAR(m.temporal_rate(psi, X, 0, point(0, x)) / grw, 1.0, 1e-3) << x;
  }
  EXPECT_NEAR(m.total_rate(psi, X, 0.0) * tau, 1.0, 1e-3);
}

TEST(Temporal, RateVanishesJustAfterAFreshFlash) {
  // small waiting times throw flashes far out along the light cone
  auto g = make_grid(64, 128);
  TemporalModel m = model1();
  State psi = State::product({packet(g, 0)});
  EXPECT_LT(m.total_rate(psi, {point(0, 0)}, 1e-3) * kTau, 1e-2);
  EXPECT_DOUBLE_EQ(m.total_rate(psi, {point(0, 0)}, 0.0), 0.0);
}

TEST(Temporal, EnvelopeViolationRestartsDeterministically) {
  auto g = make_grid(64, 128);
  TemporalOptions o;
  o.kappa = 0.2;
  TemporalModel m = model1(kTau, o);
  State psi = State::product({packet(g, 0)});
  TemporalModel::RunOptions ro;
  ro.t_max = 40;
  int r1 = -1, r2 = -1;
  FlashHistory a = m.run(psi, {point(0, 0)}, ro, 3, 7, &r1);
  FlashHistory b = m.run(psi, {point(0, 0)}, ro, 3, 7, &r2);
  EXPECT_GT(r1, 0);
  EXPECT_EQ(r1, r2);
  ASSERT_EQ(a.count(), b.count());
  if (a.count()) {
    EXPECT_EQ(a.flashes[0][0].point.t, b.flashes[0][0].point.t);
    EXPECT_EQ(a.flashes[0][0].point.x[0], b.flashes[0][0].point.x[0]);
  }
}

TEST(Temporal, SurvivalFrequencyMatchesTheNoFlashWeight) {
  auto g = make_grid(64, 128);
  TemporalModel m = model1();
  State psi = State::product({packet(g, 0)});
  TemporalModel::RunOptions ro;
  ro.t_max = 4.0;
  const int n = 1500;
  int none = 0;
  for (int k = 0; k < n; ++k) none += m.run(psi, {point(0, 0)}, ro, 11, k).count() == 0;
  const double p = m.no_flash_weight(psi, {point(0, 0)}, ro.t_max);
  EXPECT_NEAR(static_cast<double>(none) / n, p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(Temporal, FirstFlashesMatchTheHyperboloidSampler) {
  // flashes on small hyperboloids can sit at huge rapidities, so both samples are censored at t_max
  auto g = make_grid(64, 128);
  TemporalModel m = model1();
  State psi = State::product({packet(g, 0)});
  FlashModel fm({DiracParticle(kMass)}, kTau, kA);
  GenerationPlan plan;
  plan.collapse = false;
  auto rs = TrajectoryStreams::make(5, 0);
  TemporalModel::RunOptions ro;
  ro.t_max = 40;
  const int n = 1000;
  std::vector<double> ta, xa, tb, xb;
  for (int k = 0; k < n; ++k) {
    const auto e = fm.sample_generation(psi, {point(0, 0)}, rs, plan).flashes[0].point;
    if (e.t < ro.t_max) {
      ta.push_back(e.t);
      xa.push_back(e.x[0]);
    }
    const FlashHistory h = m.run(psi, {point(0, 0)}, ro, 6, k);
    if (h.count() == 1) {
      tb.push_back(h.flashes[0][0].point.t);
      xb.push_back(h.flashes[0][0].point.x[0]);
    }
  }
  EXPECT_GT(ks_two_sample(ta, tb).p_value, 0.01);
  EXPECT_GT(ks_two_sample(xa, xb).p_value, 0.01);
  const double pa = 1 - ta.size() / double(n), pb = 1 - tb.size() / double(n);
  EXPECT_NEAR(pa, pb, 4 * std::sqrt((pa + pb) * (1 - 0.5 * (pa + pb)) / n) + 1e-3);
  EXPECT_NEAR(pb, m.no_flash_weight(psi, {point(0, 0)}, ro.t_max), 4 * std::sqrt(pb * (1 - pb) / n) + 1e-3);
}

TEST(Temporal, SecondFlashDependsOnlyOnTheCurrentTuple) {
  auto g = make_grid(64, 128);
  TemporalModel m = model1();
  FlashModel fm({DiracParticle(kMass)}, kTau, kA);
  // the same collapsed state reached from two reference planes
  const SpinorField f0 = packet(g, 0);
  const SpinorField f1 = DiracParticle(kMass).propagate(f0, 2.5);
  GenerationPlan plan;
  plan.role = {LabelRole::Forced};
  plan.forced = {{3.0, 0.2}};
  auto rs = TrajectoryStreams::make(1, 0);
  const State a = fm.sample_generation(State::product({f0}), {point(0, 0)}, rs, plan).phi;
  const State b = fm.sample_generation(State::product({f1}), {point(0, 0)}, rs, plan).phi;
  const SpacetimePoint y = embed(Hyperboloid(point(0, 0), 3.0), 0.2);
  TemporalModel::RunOptions ro;
  ro.t_max = y.t + 40;
  ro.check_resolution = false;
  std::vector<double> ta, tb;
  for (int k = 0; k < 300; ++k) {
    const FlashHistory ha = m.run(a, {y}, ro, 2, k), hb = m.run(b, {y}, ro, 3, k);
    ta.push_back(ha.count() ? ha.flashes[0][0].point.t : ro.t_max);
    tb.push_back(hb.count() ? hb.flashes[0][0].point.t : ro.t_max);
  }
  EXPECT_GT(ks_two_sample(ta, tb).p_value, 0.01);
}
