#include <gtest/gtest.h>

#include <cmath>

#include "grwf/flash.hpp"
#include "grwf/povm.hpp"

using namespace grwf;

namespace {

constexpr double kTau = 10.0, kA = 1.0, kMass = 5.0;

SpinorField packet(GridPtr g, double x0, double w = 2.0, double k0 = 0.0, double t = 0.0) {
  return normalized(positive_energy_project(gaussian_spinor(g, t, x0, w, k0), kMass));
}

PovmLabel label_on(GridPtr g, double t0 = 0.0) {
  PovmLabel l;
  l.grid = g;
  l.t0 = t0;
  l.mass = kMass;
  return l;
}

}  // namespace

TEST(Povm, CollapseOperatorIsSelfAdjointAndPositive) {
  auto g = make_grid(32, 64);
  PovmEngine e({label_on(g)}, kTau, kA);
  for (double r : {0.3, 2.0, 15.0}) {
    CollapseOperator op = e.build_collapse_operator(0, point(0, 1), {r, 0.2});
    EXPECT_LT(op.self_adjointness_defect(), 1e-8);
    Eigen::SelfAdjointEigenSolver<MatC> es(op.matrix);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
    EXPECT_NEAR(op.y.t - 0, r * std::cosh(0.2), 1e-12);
  }
}

TEST(Povm, SurfaceMapIsNearlyIsometric) {
  auto g = make_grid(32, 64);
  PovmEngine e({label_on(g)}, kTau, kA);
  for (double r : {0.5, 5.0, 50.0}) {
    HyperboloidMap m = e.surface_map(0, Hyperboloid(point(0, 0), r));
    // plane waves meet the kink where the surface closes, packets away from it do not
    EXPECT_LT(m.unitarity_defect(), 0.1) << r;
    MatC V(2 * g->M, 3);
    V.col(0) = packet(g, 0).spectrum();
    V.col(1) = packet(g, -3, 1.5, 0.6).spectrum();
    V.col(2) = gaussian_spinor(g, 0, 2, 2.0, -0.5, 1.0, 0.3).spectrum();
    const MatC FV = m.F() * V;
    // by r = 50 the spreading packets reach the closing kink
    EXPECT_LT((FV.adjoint() * FV - V.adjoint() * V).norm(), r < 10 ? 1e-8 : 1e-4) << r;
    const MatC I = m.W().adjoint() * m.W();
    EXPECT_LT((I - MatC::Identity(I.rows(), I.cols())).norm(), 1e-10);
  }
}

TEST(Povm, ResolutionOfIdentityOnPacketSubspace) {
  auto g = make_grid(32, 64);
  PovmEngine e({label_on(g)}, kTau, kA);
  MatC V(2 * g->M, 4);
  V.col(0) = packet(g, 0).spectrum();
  V.col(1) = packet(g, -5, 1.5).spectrum();
  V.col(2) = packet(g, 4, 2.0, 0.8).spectrum();
  V.col(3) = gaussian_spinor(g, 0, 2, 3.0, -0.5, 1.0, 0.3).spectrum();
  const MatC Q = e.future_form(0, point(0, 0), V);
  const MatC G = V.adjoint() * V;
  EXPECT_LT((Q - G).norm() / G.norm(), 1e-3 + e.truncation_budget());
}

TEST(Povm, MarginalizingTheLastFlashRecoversTheShorterPattern) {
  auto g = make_grid(32, 64);
  PovmEngine e({label_on(g)}, kTau, kA);
  auto psi = MultiTimeState<SpinorField>::product({packet(g, 0)});
  const SpacetimePoint x0 = point(0, 0);
  // n = 0
  EXPECT_NEAR(e.prob_up_to_surface(psi, {x0}, {{}}, {0.0}), 1.0, 1e-3);
  // n = 1
  for (FlashCoord f : {FlashCoord{3.0, 0.1}, FlashCoord{12.0, -0.05}}) {
    const MatC V = e.apply_chain(0, x0, {f}, MatC(psi.terms[0].factors[0]->spectrum()));
    const SpacetimePoint x1 = embed(Hyperboloid(x0, f.dT), f.chi);
    const double marg = std::real(e.future_form(0, x1, V)(0, 0));
    const double d = V.squaredNorm();
    EXPECT_NEAR(marg / d, 1.0, 1e-3);
    EXPECT_NEAR(e.first_flash_density(psi, {x0}, {f}), std::exp(-f.dT / kTau) / kTau * d, 1e-14);
  }
}

TEST(Povm, DensitiesDoNotDependOnTheReferencePlane) {
  auto g = make_grid(32, 64);
  const SpinorField f0 = packet(g, -1, 2.0, 0.4);
  const SpinorField f1 = DiracParticle(kMass).propagate(f0, 3.7);
  PovmEngine e0({label_on(g, 0.0)}, kTau, kA), e1({label_on(g, 3.7)}, kTau, kA);
  auto p0 = MultiTimeState<SpinorField>::product({f0});
  auto p1 = MultiTimeState<SpinorField>::product({f1});
  const SpacetimePoint x0 = point(0.5, -1);
  for (auto fl : std::vector<std::vector<FlashCoord>>{{{2.0, 0.3}}, {{6.0, -0.2}, {1.5, 0.4}}}) {
    const double d0 = e0.joint_density(p0, {x0}, {fl});
    const double d1 = e1.joint_density(p1, {x0}, {fl});
    EXPECT_NEAR(d1 / d0, 1.0, 1e-6);
  }
}

TEST(Povm, FirstFlashDensityAgreesWithTheSampler) {
  auto g = make_grid(64, 128);
  PovmEngine e({label_on(g)}, kTau, kA);
  FlashModel model({DiracParticle(kMass)}, kTau, kA);
  auto psi = MultiTimeState<SpinorField>::product({packet(g, 0)});
  for (FlashCoord f : {FlashCoord{1.0, 0.5}, FlashCoord{7.0, 0.05}, FlashCoord{20.0, -0.1}}) {
    const double a = e.first_flash_density(psi, {point(0, 0)}, {f});
    const double b = model.generation_density(psi, {point(0, 0)}, {f});
    EXPECT_NEAR(a / b, 1.0, 1e-3);
  }
}

TEST(Povm, ProductStatesGiveProductDensities) {
  auto g = make_grid(32, 64);
  PovmEngine e2({label_on(g), label_on(g)}, kTau, kA), e1({label_on(g)}, kTau, kA);
  const SpinorField a = packet(g, -6), b = packet(g, 6);
  auto psi = MultiTimeState<SpinorField>::product({a, b});
  const std::vector<SpacetimePoint> X{point(0, -6), point(0, 6)};
  const FlashCoord y1{2.0, 0.2}, y2{4.0, -0.1};
  const double d = e2.first_flash_density(psi, X, {y1, y2});
  const double da = e1.first_flash_density(MultiTimeState<SpinorField>::product({a}), {X[0]}, {y1});
  const double db = e1.first_flash_density(MultiTimeState<SpinorField>::product({b}), {X[1]}, {y2});
  EXPECT_NEAR(d / (da * db), 1.0, 1e-12);
}

TEST(Povm, NoFlashBeforeASurface) {
  auto g = make_grid(32, 64);
  FlashModel model({DiracParticle(kMass)}, kTau, kA);
  PovmOptions po;
  po.r_floor = model.r_floor();
  PovmEngine e({label_on(g)}, kTau, kA, po);
  auto psi = MultiTimeState<SpinorField>::product({packet(g, 0)});
  GenerationPlan plan;
  plan.collapse = false;
  auto rs = TrajectoryStreams::make(21, 0);
  std::vector<double> t;
  for (int k = 0; k < 4000; ++k) t.push_back(model.sample_generation(psi, {point(0, 0)}, rs, plan).flashes[0].point.t);
  // every flash with dT beyond ts lies beyond the surface, some closer ones do too
  double prev = 1.0;
  for (double ts : {1.0, 5.0, 15.0}) {
    const double p = e.prob_up_to_surface(psi, {point(0, 0)}, {{}}, {ts});
    EXPECT_GE(p, std::exp(-ts / kTau) - 1e-3);
    EXPECT_LT(p, prev);
    double mc = 0;
    for (double v : t) mc += v >= ts;
    mc /= t.size();
    EXPECT_NEAR(p, mc, 4 * std::sqrt(mc * (1 - mc) / t.size()) + 1e-3) << ts;
    prev = p;
  }
}

TEST(Povm, FlatLimitMatchesGrwMultiplication) {
  auto g = make_grid(32, 64);
  PovmEngine e({label_on(g)}, kTau, kA);
  const double r = 1e4;
  const SpinorField f = packet(g, 0, 2.0, 0.0, -r);
  PovmLabel l = label_on(g, -r);
  PovmEngine ef({l}, kTau, kA);
  // a flash at (0, y) on the hyperboloid of (-r, 0)
  const double y = 0.7;
  const double chi = std::asinh(y / r);
  const MatC jv = ef.apply_chain(0, point(-r, 0), {{r, chi}}, MatC(f.spectrum()));
  const SpinorField jf = DiracParticle(kMass).propagate(SpinorField::from_spectrum_at(g, -r, jv.col(0)), 0.0);
  SpinorField ref = DiracParticle(kMass).propagate(f, 0.0);
  for (int x = 0; x < g->M; ++x)
    for (int c = 0; c < 2; ++c) ref.at(c, x) *= gaussian_jump_factor(g->wrap(y - g->x(x)), kA);
  EXPECT_LT((jf.values - ref.values).norm() / ref.values.norm(), 1e-3);
}
