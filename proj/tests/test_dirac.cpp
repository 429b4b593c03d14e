#include <gtest/gtest.h>

#include <cmath>

#include "grwf/dirac.hpp"
#include "grwf/rng.hpp"

using namespace grwf;

namespace {

SpinorField random_smooth_field(GridPtr g, Rng& rng, double t = 0) {
  SpinorField f(g, t);
  for (int n = 0; n < 4; ++n) {
    const auto p = gaussian_spinor(g, t, 10 * rng.uniform() - 5, 0.8 + rng.uniform(), 2 * rng.uniform() - 1,
                                   cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal()));
    f.values += cplx(rng.normal(), rng.normal()) * p.values;
  }
  return normalized(f);
}

// direct trigonometric sum of the spectral interpolant at (x) for a plane field
Eigen::Vector2cd interpolate(const SpinorField& f, double x) {
  const Grid& g = *f.grid;
  Eigen::Vector2cd v(0, 0);
  for (int j = 0; j < g.M; ++j) {
    // Dirichlet kernel of the periodic band-limited interpolant
    const double d = x - g.x(j);
    double ker = 0;
    for (int p = 0; p < g.M; ++p) ker += std::cos(g.k(p) * d) / g.M;
    // the Nyquist mode is treated as a cosine
    v[0] += ker * f.at(0, j);
    v[1] += ker * f.at(1, j);
  }
  return v;
}

}  // namespace

TEST(Dirac, PlaneWavePhasePerMode) {
  auto g = make_grid(32.0, 64);
  const double m = 1.3;
  for (int p : {0, 1, 5, 60}) {
    const double k = g->k(p);
    const double E = std::sqrt(k * k + m * m);
    for (int branch : {1, -1}) {
      // eigenvector of k sigma_1 + m sigma_3 with eigenvalue branch*E
      Eigen::Vector2cd v(k, branch * E - m);
      if (v.norm() < 1e-12) v = Eigen::Vector2cd(1, 0);
      v.normalize();
      SpinorField f(g, 0.0);
      for (int j = 0; j < g->M; ++j) {
        const cplx e = std::polar(1.0 / std::sqrt(g->L), k * g->x(j));
        f.at(0, j) = v[0] * e;
        f.at(1, j) = v[1] * e;
      }
      DiracParticle part(m);
      const double dt = 0.77;
      auto h = part.propagate(f, dt);
      const cplx phase = std::polar(1.0, -branch * E * dt);
      double err = 0;
      for (int j = 0; j < g->M; ++j)
        for (int c = 0; c < 2; ++c) err = std::max(err, std::abs(h.at(c, j) - phase * f.at(c, j)));
      EXPECT_LT(err, 1e-10) << "p=" << p << " branch=" << branch;
    }
  }
}

TEST(Dirac, PropagateIdentityAndUnitarity) {
  auto g = make_grid(40.0, 128);
  auto rng = Rng::stream(5, 0, Purpose::Test);
  DiracParticle part(2.0);
  const auto f = random_smooth_field(g, rng);
  const auto h = random_smooth_field(g, rng);
  EXPECT_EQ((part.propagate(f, 0.0).values - f.values).norm(), 0.0);
  const auto f2 = part.propagate(f, 3.7), h2 = part.propagate(h, 3.7);
  EXPECT_NEAR(plane_norm2(f2), 1.0, 1e-10);
  EXPECT_LT(std::abs(plane_inner_product(f2, h2) - plane_inner_product(f, h)), 1e-9);
  const auto back = part.propagate(f2, 0.0);
  EXPECT_LT((back.values - f.values).norm(), 1e-10);
}

TEST(Dirac, SplitStepUnitarityAndConsistency) {
  auto g = make_grid(40.0, 128);
  auto rng = Rng::stream(6, 0, Purpose::Test);
  DiracParticle part(1.5, [](double t, double x) { return 0.3 * std::exp(-x * x) * (1 + 0.2 * std::sin(t)); });
  const auto f = random_smooth_field(g, rng), h = random_smooth_field(g, rng);
  const auto f2 = part.propagate(f, 2.0), h2 = part.propagate(h, 2.0);
  EXPECT_NEAR(plane_norm2(f2), 1.0, 1e-6);
  EXPECT_LT(std::abs(plane_inner_product(f2, h2) - plane_inner_product(f, h)), 1e-6);
  // zero potential through the split-step path reproduces the spectral result
  DiracParticle zero(1.5, [](double, double) { return 0.0; });
  DiracParticle free(1.5);
  EXPECT_LT((zero.propagate(f, 2.0).values - free.propagate(f, 2.0).values).norm(), 1e-10);
}

TEST(Dirac, GridTooCoarse) {
  auto g = make_grid(20.0, 64);
  const auto f = gaussian_spinor(g, 0, 0, 0.5, 0.95 * g->k_nyquist());
  DiracParticle part(1.0);
  try {
    part.propagate(f, 1.0);
    FAIL();
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridTooCoarse);
  }
}

TEST(Dirac, DiscreteContinuityOnSubinterval) {
  auto g = make_grid(40.0, 256);
  const double m = 1.0;
  const auto f = gaussian_spinor(g, 0, -1.0, 1.0, 1.2);
  FreeDiracSolution sol(f, m);
  const double a = -1.5, b = 1.0;
  auto charge = [&](double t) {
    // Gauss-Legendre-like fine trapezoid on [a, b]
    const int n = 4000;
    std::vector<double> tt(n + 1, t), xx(n + 1);
    for (int i = 0; i <= n; ++i) xx[i] = a + (b - a) * i / n;
    const VecC v = sol.evaluate(tt, xx);
    double s = 0;
    for (int i = 0; i <= n; ++i) s += (i == 0 || i == n ? 0.5 : 1.0) * (std::norm(v[2 * i]) + std::norm(v[2 * i + 1]));
    return s * (b - a) / n;
  };
  auto current = [&](double t, double x) {
    const VecC v = sol.evaluate({t}, {x});
    return 2 * std::real(std::conj(v[0]) * v[1]);  // psi^dagger sigma_1 psi
  };
  const double t1 = 0.0, t2 = 1.5;
  const int nt = 600;
  double flux = 0;
  for (int i = 0; i <= nt; ++i) {
    const double t = t1 + (t2 - t1) * i / nt;
    flux += (i == 0 || i == nt ? 0.5 : 1.0) * (current(t, a) - current(t, b));
  }
  flux *= (t2 - t1) / nt;
  EXPECT_NEAR(charge(t2) - charge(t1), flux, 1e-4);
}

TEST(Dirac, HyperboloidNormOfRestPacket) {
  auto g = make_grid(64.0, 256);
  const double m = 2.0;
  auto f = std::make_shared<const SpinorField>(gaussian_spinor(g, 0, 0, 1.0));
  DiracParticle part(m);
  auto sol = part.solution(f);
  for (double r : {0.05, 0.5, 3.0, 15.0}) {
    Hyperboloid h(point(0, 0), r);
    auto nodes = std::make_shared<const HyperboloidNodes>(support_nodes(h, *g, {sol.get()}, NodeOptions{}));
    auto res = restrict_to_hyperboloid(*sol, nodes);
    EXPECT_GE(res.norm_deficit, 0.0);
    EXPECT_LT(res.norm_deficit, 1e-3) << "r=" << r;
    EXPECT_LT(res.norm_deficit, 1e-8) << "r=" << r;
  }
}

TEST(Dirac, FlatLimitRestrictionMatchesPropagation) {
  auto g = make_grid(64.0, 256);
  const double m = 3.0;
  const auto f0 = gaussian_spinor(g, 0, 0.5, 1.0, 0.3);
  auto f = std::make_shared<const SpinorField>(f0);
  DiracParticle part(m);
  auto sol = part.solution(f);
  const double r = 1e4;
  Hyperboloid h(point(0.0, 0.5), r);
  auto nodes = std::make_shared<const HyperboloidNodes>(support_nodes(h, *g, {sol.get()}, NodeOptions{}));
  auto res = restrict_to_hyperboloid(*sol, nodes);
  const auto plane = part.propagate(f0, r);
  double err = 0;
  for (int z = 0; z < nodes->size(); z += 7) {
    if (std::abs(nodes->u[z]) > 4) continue;
    const auto v = interpolate(plane, nodes->x[z]);
    err = std::max(err, std::abs(res.field.at(z)[0] - v[0]) + std::abs(res.field.at(z)[1] - v[1]));
  }
  EXPECT_LT(err, 1e-3);
}

TEST(Dirac, HyperboloidInnerProductFlatLimit) {
  auto g = make_grid(64.0, 256);
  const double m = 2.0;
  auto f = std::make_shared<const SpinorField>(gaussian_spinor(g, 0, 0, 1.0));
  auto h = std::make_shared<const SpinorField>(gaussian_spinor(g, 0, 0.7, 1.3, 0.4));
  DiracParticle part(m);
  auto sf = part.solution(f), sh = part.solution(h);
  Hyperboloid hyp(point(-100.0, 0.0), 100.0);
  auto nodes = std::make_shared<const HyperboloidNodes>(
      support_nodes(hyp, *g, {sf.get(), sh.get()}, NodeOptions{}));
  const auto a = restrict_to_hyperboloid(*sf, nodes).field, b = restrict_to_hyperboloid(*sh, nodes).field;
  EXPECT_LT(std::abs(surface_inner_product(a, b) - plane_inner_product(*f, *h)), 1e-3);
  const cplx ab = surface_inner_product(a, b), ba = surface_inner_product(b, a);
  EXPECT_LT(std::abs(ab - std::conj(ba)), 1e-14);
  EXPECT_GE(std::real(surface_inner_product(a, a)), 0.0);
  EXPECT_LT(std::abs(std::imag(surface_inner_product(a, a))), 1e-15);
}

TEST(Dirac, RestrictionExtensionRoundTrip) {
  auto g = make_grid(64.0, 256);
  const double m = 2.0;
  const auto f0 = gaussian_spinor(g, 0, 1.0, 1.2, -0.5);
  auto f = std::make_shared<const SpinorField>(f0);
  DiracParticle part(m);
  auto sol = part.solution(f);
  Hyperboloid h(point(0.2, -0.3), 2.5);
  auto nodes = std::make_shared<const HyperboloidNodes>(support_nodes(h, *g, {sol.get()}, NodeOptions{}));
  auto res = restrict_to_hyperboloid(*sol, nodes);
  const auto back = extend_from_hyperboloid(*sol, res.field, 0.0);
  // far parts of the hyperboloid leave the periodic box, so the round trip is
  // limited by the square root of the norm deficit rather than by round-off
  EXPECT_LT(res.norm_deficit, 1e-9);
  EXPECT_LT((back.values - f0.values).norm() * std::sqrt(g->dx()), 5e-5);
  const auto later = extend_from_hyperboloid(*sol, res.field, h.apex_time());
  EXPECT_LT((later.values - part.propagate(f0, h.apex_time()).values).norm() * std::sqrt(g->dx()), 5e-5);
  // a narrow packet far from the seam round-trips to high accuracy
  const auto n0 = gaussian_spinor(g, 0, 0.0, 1.0);
  FreeDiracSolution heavy(n0, 20.0);
  Hyperboloid h2(point(0.0, 0.0), 1.0);
  auto nodes2 = std::make_shared<const HyperboloidNodes>(support_nodes(h2, *g, {&heavy}, NodeOptions{}));
  const auto back2 = extend_from_hyperboloid(heavy, restrict_to_hyperboloid(heavy, nodes2).field, 0.0);
  EXPECT_LT((back2.values - n0.values).norm() * std::sqrt(g->dx()), 1e-8);
}

TEST(Dirac, AdjointIdentity) {
  auto g = make_grid(32.0, 64);
  auto rng = Rng::stream(8, 0, Purpose::Test);
  const auto f0 = random_smooth_field(g, rng);
  for (bool with_potential : {false, true}) {
    DiracParticle part(1.0, with_potential ? PotentialFn([](double, double x) { return 0.2 * std::cos(x / 3); })
                                           : PotentialFn());
    auto f = std::make_shared<const SpinorField>(f0);
    auto sol = part.solution(f);
    std::vector<double> t, x;
    VecC b(2 * 30);
    for (int z = 0; z < 30; ++z) {
      t.push_back(3 * rng.uniform());
      x.push_back(20 * rng.uniform() - 10);
      b[2 * z] = cplx(rng.normal(), rng.normal());
      b[2 * z + 1] = cplx(rng.normal(), rng.normal());
    }
    const auto h = random_smooth_field(g, rng);
    auto sh = part.solution(std::make_shared<const SpinorField>(h));
    const VecC eh = sh->evaluate(t, x);
    const auto adj = sh->adjoint(t, x, b);
    const cplx lhs = b.dot(eh);
    const cplx rhs = plane_inner_product(adj, h);
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * (1 + std::abs(lhs))) << with_potential;
  }
}

TEST(Dirac, LadderMatchesPropagation) {
  auto g = make_grid(40.0, 128);
  const auto f0 = gaussian_spinor(g, 0, 0, 1.0, 0.5);
  auto V = [](double t, double x) { return 0.1 * std::exp(-(x - 2) * (x - 2)) * (1 + 0.3 * t); };
  DiracParticle part(2.0, V);
  auto sol = part.solution(std::make_shared<const SpinorField>(f0));
  for (double t : {1.0, 2.35, 4.0}) {
    const auto plane = part.propagate(f0, t);
    std::vector<double> tt(g->M, t), xx(g->M);
    for (int j = 0; j < g->M; ++j) xx[j] = g->x(j);
    const VecC v = sol->evaluate(tt, xx);
    double err = 0;
    for (int j = 0; j < g->M; ++j)
      err = std::max(err, std::abs(v[2 * j] - plane.at(0, j)) + std::abs(v[2 * j + 1] - plane.at(1, j)));
    EXPECT_LT(err, 1e-6) << t;
  }
  // with a vanishing potential the ladder reproduces the free evaluator
  DiracParticle zero(2.0, [](double, double) { return 0.0; });
  auto lz = zero.solution(std::make_shared<const SpinorField>(f0));
  FreeDiracSolution fz(f0, 2.0);
  std::vector<double> tt = {0.3, 1.7, 2.05}, xx = {-1.0, 0.4, 2.2};
  EXPECT_LT((lz->evaluate(tt, xx) - fz.evaluate(tt, xx)).norm(), 1e-10);
}

TEST(Dirac, PositiveEnergyProjection) {
  auto g = make_grid(64.0, 256);
  const double m = 2.0;
  auto rng = Rng::stream(9, 0, Purpose::Test);
  const auto f = random_smooth_field(g, rng), h = random_smooth_field(g, rng);
  const auto pf = positive_energy_project(f, m);
  EXPECT_LT((positive_energy_project(pf, m).values - pf.values).norm(), 1e-12);
  EXPECT_LT(std::abs(plane_inner_product(pf, h) - plane_inner_product(f, positive_energy_project(h, m))), 1e-12);
  // positive-branch plane wave
  const double k = g->k(3), E = std::sqrt(k * k + m * m);
  Eigen::Vector2cd v(k, E - m);
  v.normalize();
  SpinorField w(g, 0.0);
  for (int j = 0; j < g->M; ++j) {
    const cplx e = std::polar(1.0 / std::sqrt(g->L), k * g->x(j));
    w.at(0, j) = v[0] * e;
    w.at(1, j) = v[1] * e;
  }
  EXPECT_LT((positive_energy_project(w, m).values - w.values).norm(), 1e-12);
  // broad packet, width >> 1/m
  const auto broad = gaussian_spinor(g, 0, 0, 5.0);
  const auto pb = positive_energy_project(broad, m);
  EXPECT_LT(plane_norm2(broad) - plane_norm2(pb), 1e-3);
}

TEST(Dirac, BoostedRestPacket) {
  auto g = make_grid(64.0, 512);
  const double m = 2.0, eta = 0.3;
  const auto f = gaussian_spinor(g, 0, 0, 1.5);
  const auto b = boost_free_state(f, m, eta);
  EXPECT_NEAR(plane_norm2(b), 1.0, 1e-8);
  // mean momentum of a boosted rest packet is m sinh(eta), up to packet-width corrections
  const VecC c = b.spectrum();
  double pk = 0, n = 0;
  for (int p = 0; p < g->M; ++p) {
    const double w = std::norm(c[p]) + std::norm(c[g->M + p]);
    pk += w * g->k(p);
    n += w;
  }
  EXPECT_NEAR(pk / n, m * std::sinh(eta), 0.02);
}
