#pragma once

// Exact small-instance flash distributions in the Heisenberg form. States
// are spectral coefficient vectors on a reference plane t = t0 of each
// label. For a hyperboloid H the surface-data map
//   F = diag(sqrt(w) G^{1/2}) Ev,   Ev: coefficients -> node values,
// is an isometry up to quadrature; its polar factor W = F (F^dag F)^{-1/2}
// is used in the collapse operator
//   jhat(y) = W^dag D_y W,   D_y = diag(j(sigma_y - sigma_z)).
// Densities use the coordinates (dT, sigma) per flash; see flash.hpp.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "grwf/dirac.hpp"
#include "grwf/events.hpp"
#include "grwf/multitime.hpp"
#include "grwf/sampler.hpp"

namespace grwf {

struct PovmOptions {
  NodeOptions nodes;
  double y_spacing = 0.125;  // sigma quadrature spacing in units of a
  double cut = 8.0;          // jump factors vanish beyond cut * a
  double T_cut = 20.0;       // dT quadrature range in units of tau
  int r_nodes = 24;          // Gauss-Legendre nodes in 1 - exp(-dT / tau)
  double r_floor = 0;        // waiting times below are excluded and the rest renormalized
  int panel_order = 8;       // Gauss-Legendre nodes per panel of the surface-region integrals
};

// Particle data needed to build surface maps: the reference plane and the evolution.
struct PovmLabel {
  GridPtr grid;
  double t0 = 0;
  double mass = 1;
  PotentialFn potential;  // empty: free
  DiracOptions dirac;
};

// Surface map of one hyperboloid, realized on the coefficient space of a label.
class HyperboloidMap {
 public:
  HyperboloidMap(const PovmLabel& lab, const Hyperboloid& h, const NodeOptions& o) : h_(h) {
    const Grid& g = *lab.grid;
    const int D = 2 * g.M;
    nodes_ = std::make_shared<const HyperboloidNodes>(make_nodes(h, -0.5 * g.L, 0.5 * g.L, o, true));
    const HyperboloidNodes& n = *nodes_;
    const int Z = n.size();
    if (Z == 0) throw SimulationError(ErrorKind::WindowExceeded, "hyperboloid has no nodes");
    MatC F(2 * Z, D);
    if (!lab.potential) {
      const double norm = 1.0 / std::sqrt(g.L);
      for (int z = 0; z < Z; ++z) {
        const double s = n.t[z] - lab.t0;
        for (int p = 0; p < g.M; ++p) {
          const cplx ph = std::polar(norm, g.k(p) * n.x[z]);
          const detail::Mode2 u = detail::free_dirac_mode(g.k(p), lab.mass, s);
          F(2 * z, p) = ph * u.a00;
          F(2 * z, g.M + p) = ph * u.a01;
          F(2 * z + 1, p) = ph * u.a10;
          F(2 * z + 1, g.M + p) = ph * u.a11;
        }
      }
    } else {
      // evolve every basis vector through the potential
      for (int b = 0; b < D; ++b) {
        VecC e = VecC::Zero(D);
        e[b] = 1.0;
        LadderDiracSolution sol(SpinorField::from_spectrum_at(lab.grid, lab.t0, e), lab.mass, lab.potential,
                                lab.dirac);
        F.col(b) = sol.evaluate(n.t, n.x);
      }
    }
    for (int z = 0; z < Z; ++z) {
      const double sw = std::sqrt(n.w[z]);
      const double c = std::cosh(0.5 * n.chi[z]), s = std::sinh(0.5 * n.chi[z]);
      for (int col = 0; col < D; ++col) {
        const cplx a = F(2 * z, col), d = F(2 * z + 1, col);
        F(2 * z, col) = sw * (c * a - s * d);
        F(2 * z + 1, col) = sw * (c * d - s * a);
      }
    }
    F_ = F;
    const MatC G = F.adjoint() * F;
    defect_ = (G - MatC::Identity(D, D)).norm() / std::sqrt(static_cast<double>(D));
    Eigen::SelfAdjointEigenSolver<MatC> es(G);
    const VecR ev = es.eigenvalues();
    if (!(ev.minCoeff() > 0))
      throw SimulationError(ErrorKind::NormalizationFailure, "surface map is not injective on the grid");
    const MatC isq = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
    W_ = F * isq;
    sigma_.resize(Z);
    for (int z = 0; z < Z; ++z) sigma_[z] = n.sigma(z);
  }

  const Hyperboloid& hyperboloid() const { return h_; }
  const HyperboloidNodes& nodes() const { return *nodes_; }
  const MatC& W() const { return W_; }
  // surface data map before the polar correction
  const MatC& F() const { return F_; }
  // rms deviation of F^dag F from the identity before the polar correction
  double unitarity_defect() const { return defect_; }
  double sigma_lo() const { return sigma_.front(); }
  double sigma_hi() const { return sigma_.back(); }

  // node range [z0, z1) within cut * a of sigma_y, with the jump factors
  void jump_band(double sigma_y, double a, double cut, int& z0, int& z1, VecR& j) const {
    z0 = static_cast<int>(std::lower_bound(sigma_.begin(), sigma_.end(), sigma_y - cut * a) - sigma_.begin());
    z1 = static_cast<int>(std::upper_bound(sigma_.begin(), sigma_.end(), sigma_y + cut * a) - sigma_.begin());
    j.resize(std::max(0, z1 - z0));
    for (int z = z0; z < z1; ++z) j[z - z0] = gaussian_jump_factor(sigma_y - sigma_[z], a);
  }

  // jhat(y) V for coefficient vectors V given their surface data WV = W V
  MatC apply_jump(double sigma_y, double a, double cut, const MatC& WV) const {
    int z0, z1;
    VecR j;
    jump_band(sigma_y, a, cut, z0, z1, j);
    if (z1 <= z0) return MatC::Zero(W_.cols(), WV.cols());
    MatC B = WV.middleRows(2 * z0, 2 * (z1 - z0));
    for (int z = 0; z < z1 - z0; ++z) B.middleRows(2 * z, 2) *= j[z];
    return W_.middleRows(2 * z0, 2 * (z1 - z0)).adjoint() * B;
  }

  MatC collapse_operator(double sigma_y, double a, double cut) const {
    return apply_jump(sigma_y, a, cut, W_);
  }

 private:
  Hyperboloid h_;
  NodesPtr nodes_;
  MatC F_, W_;
  std::vector<double> sigma_;
  double defect_ = 0;
};

struct CollapseOperator {
  int label = 0;
  SpacetimePoint x_prev, y;
  MatC matrix;  // on the label's coefficient space at its reference plane
  double self_adjointness_defect() const { return (matrix - matrix.adjoint()).norm() / matrix.norm(); }
};

// Gauss-Legendre nodes and weights on [lo, hi]
inline void gauss_legendre(int n, double lo, double hi, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0);
  w.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = 0.5 * (lo + hi) - 0.5 * (hi - lo) * z;
    w[i] = (hi - lo) / ((1 - z * z) * dp * dp);
  }
}

class PovmEngine {
 public:
  PovmEngine(std::vector<PovmLabel> labels, double tau, double a, PovmOptions opt = {})
      : labels_(std::move(labels)), tau_(tau), a_(a), opt_(opt) {
    if (!(tau > 0) || !(a > 0)) throw SimulationError(ErrorKind::ConfigError, "tau and a must be positive");
  }

  int labels() const { return static_cast<int>(labels_.size()); }
  double tau() const { return tau_; }
  double a() const { return a_; }
  const PovmOptions& options() const { return opt_; }
  const PovmLabel& label(int i) const { return labels_.at(i); }
  // exponential mass beyond the dT quadrature range
  double truncation_budget() const { return std::exp(-opt_.T_cut); }

  HyperboloidMap surface_map(int i, const Hyperboloid& h) const { return HyperboloidMap(labels_.at(i), h, opt_.nodes); }

  CollapseOperator build_collapse_operator(int i, const SpacetimePoint& x_prev, FlashCoord f) const {
    if (!(f.dT > 0)) throw SimulationError(ErrorKind::CausalOrderViolation, "flash not in the future of its predecessor");
    const Hyperboloid h(x_prev, f.dT);
    HyperboloidMap map = surface_map(i, h);
    CollapseOperator op;
    op.label = i;
    op.x_prev = x_prev;
    op.y = embed(h, f.chi);
    op.matrix = map.collapse_operator(f.dT * f.chi, a_, opt_.cut);
    const double d = op.self_adjointness_defect();
    if (d > 1e-8) throw SimulationError(ErrorKind::NormalizationFailure, "collapse operator not self-adjoint");
    return op;
  }

  // coefficient vector of a lab factor on label i's reference plane
  VecC coefficients(int i, const SpinorField& f) const {
    const PovmLabel& L = labels_.at(i);
    if (f.t == L.t0) return f.spectrum();
    DiracParticle p(L.mass, L.potential, L.dirac);
    return p.propagate(f, L.t0).spectrum();
  }

  // apply the chain jhat^n ... jhat^1 for a flash sequence to column vectors V
  MatC apply_chain(int i, const SpacetimePoint& x0, const std::vector<FlashCoord>& flashes, MatC V) const {
    SpacetimePoint x = x0;
    for (const auto& f : flashes) {
      if (!(f.dT > 0)) throw SimulationError(ErrorKind::CausalOrderViolation, "flashes are not causally chained");
      const Hyperboloid h(x, f.dT);
      HyperboloidMap map = surface_map(i, h);
      V = map.apply_jump(f.dT * f.chi, a_, opt_.cut, map.W() * V);
      x = embed(h, f.chi);
    }
    return V;
  }

  // Joint density of the given flash sequences per label (coordinates (dT, sigma)
  // per flash, a space-time density), including the waiting-time factors.
  double joint_density(const MultiTimeState<SpinorField>& psi, const std::vector<SpacetimePoint>& x0,
                       const std::vector<std::vector<FlashCoord>>& flashes) const {
    const int N = labels();
    check_state(psi, x0);
    if (static_cast<int>(flashes.size()) != N) throw SimulationError(ErrorKind::ConfigError, "one sequence per label");
    const int S = psi.rank();
    MatC P = MatC::Ones(S, S);
    double w = 1;
    for (int i = 0; i < N; ++i) {
      if (flashes[i].size() > 2) throw SimulationError(ErrorKind::ConfigError, "at most two flashes per label");
      for (auto& f : flashes[i]) w *= waiting_density(f.dT);
      MatC V = label_vectors(psi, i);
      V = apply_chain(i, x0[i], flashes[i], V);
      P = P.cwiseProduct(V.adjoint() * V);
    }
    return bilinear(psi, P) * w;
  }

  double first_flash_density(const MultiTimeState<SpinorField>& psi, const std::vector<SpacetimePoint>& x0,
                             const std::vector<FlashCoord>& y) const {
    std::vector<std::vector<FlashCoord>> f;
    for (auto& v : y) f.push_back({v});
    return joint_density(psi, x0, f);
  }

  // Region-restricted quadrature of (1/tau) e^{-dT/tau} jhat(y)^2 over the
  // future cone of x, as the form V^dag Q V. keep(dT, chi) selects the region.
  MatC future_form(int i, const SpacetimePoint& x, const MatC& V,
                   const std::function<bool(double, double)>& keep = nullptr) const {
    const int K = static_cast<int>(V.cols());
    MatC Q = MatC::Zero(K, K);
    std::vector<double> s, ws;
    gauss_legendre(opt_.r_nodes, 0.0, 1.0 - std::exp(-opt_.T_cut), s, ws);
    for (int q = 0; q < opt_.r_nodes; ++q) {
      const double r = -tau_ * std::log1p(-s[q]);
      const HyperboloidMap map = surface_map(i, Hyperboloid(x, r));
      const MatC WV = map.W() * V;
      const double h = opt_.y_spacing * a_;
      const std::vector<double> y =
          uniform_grid(map.sigma_lo() - opt_.cut * a_, map.sigma_hi() + opt_.cut * a_, h);
      MatC acc = MatC::Zero(K, K);
      for (size_t k = 0; k < y.size(); ++k) {
        if (keep && !keep(r, y[k] / r)) continue;
        const double wt = (k == 0 || k + 1 == y.size()) ? 0.5 : 1.0;
        const MatC B = map.apply_jump(y[k], a_, opt_.cut, WV);
        acc += wt * (B.adjoint() * B);
      }
      Q += ws[q] * (y[1] - y[0]) * acc;
    }
    return Q;
  }

  double waiting_density(double dT) const {
    return dT < opt_.r_floor ? 0.0 : std::exp(-(dT - opt_.r_floor) / tau_) / tau_;
  }

  // V^dag E(beyond t = t_s) V for the next flash after x: hyperboloids with
  // r >= t_s - x.t lie entirely beyond; on smaller ones the part |sigma| >= r acosh((t_s - x.t) / r)
  MatC beyond_form(int i, const SpacetimePoint& x, const MatC& V, double t_s) const {
    const double tp = t_s - x.t, rf = opt_.r_floor;
    const MatC G = V.adjoint() * V;
    if (!(tp > rf)) return G;
    MatC Q = std::exp(-(tp - rf) / tau_) * G;
    const double len = tp - rf;
    const double first = std::min(0.05 * len, 0.02 * a_ * a_ / tp);
    const double cap = std::min(a_, 2.0 / labels_.at(i).mass);
    std::vector<double> lo{0.0};
    for (double e = first; e < 0.5 * len; e = std::min(2 * e, e + cap)) lo.push_back(e);
    lo.push_back(0.5 * len);
    std::vector<double> gx, gw;
    for (size_t p = 0; p + 1 < lo.size(); ++p) {
      gauss_legendre(opt_.panel_order, lo[p], lo[p + 1], gx, gw);
      for (int k = 0; k < opt_.panel_order; ++k)
        for (double r : {rf + gx[k], tp - gx[k]}) {
          const HyperboloidMap map = surface_map(i, Hyperboloid(x, r));
          const double sm = r * std::acosh(tp / r);
          MatC B = map.W() * V;
          const int Z = map.nodes().size();
          for (int z = 0; z < Z; ++z) {
            const double sz = map.nodes().sigma(z);
            const double b = 0.5 * std::erfc((sm - sz) / a_) + 0.5 * std::erfc((sm + sz) / a_);
            B.middleRows(2 * z, 2) *= std::sqrt(b);
          }
          Q += (gw[k] * waiting_density(r)) * (B.adjoint() * B);
        }
    }
    return Q;
  }

  // Probability density of the flash pattern (at most one flash per label)
  // with no further flash before the constant-t surfaces t_surface[i]:
  // the pattern's POVM with one more flash integrated over the future of each surface.
  double prob_up_to_surface(const MultiTimeState<SpinorField>& psi, const std::vector<SpacetimePoint>& x0,
                            const std::vector<std::vector<FlashCoord>>& pattern,
                            const std::vector<double>& t_surface) const {
    const int N = labels();
    check_state(psi, x0);
    const int S = psi.rank();
    MatC P = MatC::Ones(S, S);
    double w = 1;
    for (int i = 0; i < N; ++i) {
      if (pattern[i].size() > 1) throw SimulationError(ErrorKind::ConfigError, "at most one flash per label");
      SpacetimePoint last = x0[i];
      for (auto& f : pattern[i]) {
        w *= waiting_density(f.dT);
        last = embed(Hyperboloid(last, f.dT), f.chi);
        if (last.t > t_surface[i])
          throw SimulationError(ErrorKind::CausalOrderViolation, "pattern flash lies beyond its surface");
      }
      MatC V = apply_chain(i, x0[i], pattern[i], label_vectors(psi, i));
      P = P.cwiseProduct(beyond_form(i, last, V, t_surface[i]));
    }
    return bilinear(psi, P) * w;
  }

 private:
  void check_state(const MultiTimeState<SpinorField>& psi, const std::vector<SpacetimePoint>& x0) const {
    if (psi.particles() != labels() || static_cast<int>(x0.size()) != labels())
      throw SimulationError(ErrorKind::ConfigError, "state, labels and flashes disagree in number");
  }

  MatC label_vectors(const MultiTimeState<SpinorField>& psi, int i) const {
    const int S = psi.rank();
    MatC V(2 * labels_[i].grid->M, S);
    std::map<const SpinorField*, int> seen;
    for (int s = 0; s < S; ++s) {
      const SpinorField* f = psi.terms[s].factors[i].get();
      auto it = seen.find(f);
      if (it != seen.end()) {
        V.col(s) = V.col(it->second);
      } else {
        V.col(s) = coefficients(i, *f);
        seen.emplace(f, s);
      }
    }
    return V;
  }

  static double bilinear(const MultiTimeState<SpinorField>& psi, const MatC& P) {
    const VecC c = psi.coefficients();
    return std::real(c.dot(P * c));
  }

  std::vector<PovmLabel> labels_;
  double tau_, a_;
  PovmOptions opt_;
};

}  // namespace grwf
