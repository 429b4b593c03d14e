#pragma once

// Free Schroedinger evolution i d_t psi = -(1/2m) d_x^2 psi, spectral.
// A frozen particle has H = 0.

#include "grwf/grid.hpp"

namespace grwf {

class SchrodingerParticle {
 public:
  using Field = ScalarField;

  explicit SchrodingerParticle(double mass, double grid_tail_tol = 1e-6) : mass_(mass), tail_tol_(grid_tail_tol) {
    if (!(mass > 0)) throw SimulationError(ErrorKind::ConfigError, "mass must be positive");
  }
  static SchrodingerParticle frozen() {
    SchrodingerParticle p(1.0);
    p.frozen_ = true;
    return p;
  }

  double mass() const { return mass_; }
  bool is_frozen() const { return frozen_; }

  void check_resolution(const ScalarField& f) const {
    const double tail = high_band_fraction(f);
    if (tail > tail_tol_)
      throw SimulationError(ErrorKind::GridTooCoarse, "spectral mass above 3/4 Nyquist is " + std::to_string(tail));
  }

  ScalarField propagate(const ScalarField& f, double t_target) const {
    if (t_target == f.t) return f;
    if (frozen_) return ScalarField(f.grid, t_target, f.values);
    check_resolution(f);
    const Grid& g = *f.grid;
    VecC c = f.spectrum();
    const double s = t_target - f.t;
    for (int p = 0; p < g.M; ++p) {
      const double k = g.k(p);
      c[p] *= std::polar(1.0, -0.5 * k * k / mass_ * s);
    }
    return ScalarField::from_spectrum_at(f.grid, t_target, c);
  }

 private:
  double mass_;
  double tail_tol_;
  bool frozen_ = false;
};

}  // namespace grwf
