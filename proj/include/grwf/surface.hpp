#pragma once

// Quadrature nodes on a hyperboloid and spinor fields sampled there.
//
// Nodes are labelled by the spatial offset u = x - center.x, so that
// t = center.t + sqrt(r^2 + u^2) and chi = asinh(u / r). They are uniform in
//   xi(u) = u / du_max + asinh(u / r) / dchi_max,
// which keeps both the spatial spacing below du_max and the rapidity spacing
// below dchi_max. The weights are arc-length elements r dchi.
//
// Field values on a hyperboloid are stored node-major: v[C*z + c].

#include <cmath>
#include <memory>
#include <vector>

#include "grwf/grid.hpp"
#include "grwf/spacetime.hpp"

namespace grwf {

struct NodeOptions {
  double du_max = 0.125;
  double dchi_max = 0.1;
  double chi_max = 12.0;
};

struct HyperboloidNodes {
  Hyperboloid h;
  std::vector<double> u, chi, t, x, w;

  int size() const { return static_cast<int>(u.size()); }
  // arc-length coordinate along the hyperboloid
  double sigma(int z) const { return h.radius * chi[z]; }
  double total_weight() const {
    double s = 0;
    for (double v : w) s += v;
    return s;
  }
};

using NodesPtr = std::shared_ptr<const HyperboloidNodes>;

namespace detail {
inline double node_xi(double u, double r, const NodeOptions& o) { return u / o.du_max + std::asinh(u / r) / o.dchi_max; }
inline double node_dxi(double u, double r, const NodeOptions& o) {
  return 1.0 / o.du_max + 1.0 / (o.dchi_max * std::sqrt(r * r + u * u));
}
}  // namespace detail

// nodes covering offsets u in [u_lo, u_hi], clipped to |chi| <= chi_max.
// periodic: [u_lo, u_hi) is one period of a closed surface and the node at
// u_hi is identified with the one at u_lo.
inline HyperboloidNodes make_nodes(const Hyperboloid& h, double u_lo, double u_hi, const NodeOptions& o,
                                   bool periodic = false) {
  const double r = h.radius;
  const double umax = r * std::sinh(o.chi_max);
  if (u_lo < -umax || u_hi > umax) periodic = false;
  u_lo = std::max(u_lo, -umax);
  u_hi = std::min(u_hi, umax);
  HyperboloidNodes n;
  n.h = h;
  if (!(u_hi > u_lo)) return n;
  const double xi_lo = detail::node_xi(u_lo, r, o), xi_hi = detail::node_xi(u_hi, r, o);
  const int intervals = std::max(1, static_cast<int>(std::ceil(xi_hi - xi_lo)));
  const int count = periodic ? intervals : intervals + 1;
  const double dxi = (xi_hi - xi_lo) / intervals;
  n.u.reserve(count);
  double u = u_lo;
  for (int i = 0; i < count; ++i) {
    const double target = xi_lo + i * dxi;
    for (int it = 0; it < 60; ++it) {
      const double step = (detail::node_xi(u, r, o) - target) / detail::node_dxi(u, r, o);
      u -= step;
      if (std::abs(step) < 1e-14 * (1 + std::abs(u))) break;
    }
    const double rho = std::sqrt(r * r + u * u);
    const double dudxi = 1.0 / detail::node_dxi(u, r, o);
    n.u.push_back(u);
    n.chi.push_back(std::asinh(u / r));
    n.t.push_back(h.center.t + rho);
    n.x.push_back(h.center.x[0] + u);
    n.w.push_back(dxi * dudxi * r / rho);
  }
  return n;
}

// keep the contiguous hull of nodes satisfying pred
template <class Pred>
HyperboloidNodes trim_nodes(const HyperboloidNodes& n, Pred pred) {
  int lo = n.size(), hi = -1;
  for (int z = 0; z < n.size(); ++z)
    if (pred(n.t[z], n.x[z])) {
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
  HyperboloidNodes out;
  out.h = n.h;
  if (hi < lo) return out;
  auto cut = [&](const std::vector<double>& v) { return std::vector<double>(v.begin() + lo, v.begin() + hi + 1); };
  out.u = cut(n.u);
  out.chi = cut(n.chi);
  out.t = cut(n.t);
  out.x = cut(n.x);
  out.w = cut(n.w);
  return out;
}

// n_mu gamma^mu premultiplied by gamma^0 for the future normal (cosh chi, sinh chi):
// G(chi) = cosh chi - sinh chi sigma_1, eigenvalues exp(-+chi)
inline void apply_metric(double chi, const cplx* f, cplx* out) {
  const double c = std::cosh(chi), s = std::sinh(chi);
  const cplx a = f[0], b = f[1];
  out[0] = c * a - s * b;
  out[1] = c * b - s * a;
}

inline void apply_metric_sqrt(double chi, const cplx* f, cplx* out) {
  const double c = std::cosh(0.5 * chi), s = std::sinh(0.5 * chi);
  const cplx a = f[0], b = f[1];
  out[0] = c * a - s * b;
  out[1] = c * b - s * a;
}

inline double metric_density(double chi, const cplx* f) {
  // f^dagger G f, evaluated without cancellation between cosh and sinh
  const cplx p = f[0] + f[1], m = f[0] - f[1];
  return 0.5 * (std::exp(-chi) * std::norm(p) + std::exp(chi) * std::norm(m));
}

struct SurfaceSpinor {
  NodesPtr nodes;
  VecC values;  // node-major, 2 per node

  int size() const { return nodes->size(); }
  const cplx* at(int z) const { return values.data() + 2 * z; }
  cplx* at(int z) { return values.data() + 2 * z; }
  double density(int z) const { return metric_density(nodes->chi[z], at(z)); }
};

inline cplx surface_inner_product(const SurfaceSpinor& f, const SurfaceSpinor& g) {
  if (f.nodes != g.nodes &&
      !(f.nodes->h.center == g.nodes->h.center && f.nodes->h.radius == g.nodes->h.radius &&
        f.nodes->u == g.nodes->u))
    throw SimulationError(ErrorKind::SurfaceMismatch, "fields live on different surfaces");
  const HyperboloidNodes& n = *f.nodes;
  cplx s = 0;
  for (int z = 0; z < n.size(); ++z) {
    cplx gg[2];
    apply_metric(n.chi[z], g.at(z), gg);
    s += n.w[z] * (std::conj(f.at(z)[0]) * gg[0] + std::conj(f.at(z)[1]) * gg[1]);
  }
  return s;
}

inline double surface_norm2(const SurfaceSpinor& f) {
  double s = 0;
  for (int z = 0; z < f.size(); ++z) s += f.nodes->w[z] * f.density(z);
  return s;
}

inline cplx surface_inner_product(const SpinorField& f, const SpinorField& g) { return plane_inner_product(f, g); }

}  // namespace grwf
