#pragma once

// Flat space-time geometry, signature (+,-,...,-), c = 1.
// Hyperboloids H_r(x) = {y : tdist(x, y) = r} parametrized in d = 1 by the
// rapidity chi: y = x + r (cosh chi, sinh chi).

#include <array>
#include <cmath>
#include <sstream>

#include "grwf/error.hpp"

namespace grwf {

template <int D = 1>
struct BasicPoint {
  double t = 0.0;
  std::array<double, D> x{};

  bool finite() const {
    if (!std::isfinite(t)) return false;
    for (double v : x)
      if (!std::isfinite(v)) return false;
    return true;
  }
  bool operator==(const BasicPoint&) const = default;
};

using SpacetimePoint = BasicPoint<1>;

inline SpacetimePoint point(double t, double x) { return SpacetimePoint{t, {x}}; }

template <int D>
double minkowski_square(const BasicPoint<D>& a, const BasicPoint<D>& b) {
  const double dt = b.t - a.t;
  double s = dt * dt;
  for (int k = 0; k < D; ++k) s -= (b.x[k] - a.x[k]) * (b.x[k] - a.x[k]);
  return s;
}

// closed future cone, light cone included
template <int D>
bool in_future(const BasicPoint<D>& x, const BasicPoint<D>& y) {
  const double dt = y.t - x.t;
  if (dt < 0) return false;
  double r2 = 0;
  for (int k = 0; k < D; ++k) r2 += (y.x[k] - x.x[k]) * (y.x[k] - x.x[k]);
  return r2 <= dt * dt;
}

template <int D>
double timelike_distance(const BasicPoint<D>& x, const BasicPoint<D>& y) {
  if (!in_future(x, y)) {
    std::ostringstream os;
    os << "y is not in the closed future of x (dt=" << (y.t - x.t) << ")";
    throw SimulationError(ErrorKind::SpacelikeSeparated, os.str());
  }
  // (dt - r)(dt + r) keeps precision near the light cone
  const double dt = y.t - x.t;
  double r2 = 0;
  for (int k = 0; k < D; ++k) r2 += (y.x[k] - x.x[k]) * (y.x[k] - x.x[k]);
  const double r = std::sqrt(r2);
  return std::sqrt((dt - r) * (dt + r));
}

struct Rapidity {
  double chi = 0.0;
};

template <int D = 1>
struct BasicHyperboloid {
  BasicPoint<D> center;
  double radius = 1.0;

  BasicHyperboloid() = default;
  BasicHyperboloid(BasicPoint<D> c, double r) : center(c), radius(r) {
    if (!(r > 0) || !std::isfinite(r))
      throw SimulationError(ErrorKind::ConfigError, "hyperboloid radius must be positive and finite");
  }
  double apex_time() const { return center.t + radius; }
};

using Hyperboloid = BasicHyperboloid<1>;

inline SpacetimePoint embed(const Hyperboloid& h, double chi) {
  return point(h.center.t + h.radius * std::cosh(chi), h.center.x[0] + h.radius * std::sinh(chi));
}
inline SpacetimePoint embed(const Hyperboloid& h, Rapidity chi) { return embed(h, chi.chi); }

// rapidity of a point on (or near) the hyperboloid, from its spatial offset
inline double rapidity_of(const Hyperboloid& h, double x) { return std::asinh((x - h.center.x[0]) / h.radius); }

inline double surface_distance(const Hyperboloid& h, double chi1, double chi2) { return h.radius * std::abs(chi1 - chi2); }
inline double surface_distance(const Hyperboloid& h, Rapidity a, Rapidity b) { return surface_distance(h, a.chi, b.chi); }

inline SpacetimePoint boost(const SpacetimePoint& p, double eta) {
  const double c = std::cosh(eta), s = std::sinh(eta);
  return point(p.t * c + p.x[0] * s, p.x[0] * c + p.t * s);
}
inline SpacetimePoint boost(const SpacetimePoint& p, Rapidity eta) { return boost(p, eta.chi); }

inline Hyperboloid boost(const Hyperboloid& h, double eta) { return Hyperboloid(boost(h.center, eta), h.radius); }

// rest-frame velocity of rapidity eta
inline double velocity(double eta) { return std::tanh(eta); }
inline double rapidity_from_velocity(double v) { return std::atanh(v); }
inline double lorentz_gamma(double v) { return 1.0 / std::sqrt(1.0 - v * v); }

}  // namespace grwf
