#pragma once

// Periodic spatial grid and fields sampled on constant-t planes.
//
// Nodes x_j = -L/2 + j dx. Spectral coefficients are normalized so that
//   psi(x) = L^{-1/2} sum_p c_p exp(i k_p x),   sum_p |c_p|^2 = dx sum_j |psi_j|^2,
// giving c_p = (dx / sqrt L) (-1)^p FFT(psi)_p.
// Field storage is component-major: value of component c at node j is v[c*M + j].

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "grwf/error.hpp"

namespace grwf {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;

struct Grid {
  double L = 64.0;
  int M = 256;

  Grid() = default;
  Grid(double length, int points) : L(length), M(points) {
    if (!(L > 0)) throw SimulationError(ErrorKind::ConfigError, "grid length must be positive");
    if (M < 4 || (M & (M - 1)) != 0) throw SimulationError(ErrorKind::ConfigError, "grid size must be a power of two");
  }

  double dx() const { return L / M; }
  double x(int j) const { return -0.5 * L + j * dx(); }
  double dk() const { return 2.0 * M_PI / L; }
  // FFT ordering
  double k(int p) const { return dk() * (p < M / 2 ? p : p - M); }
  double k_nyquist() const { return M_PI / dx(); }
  // nearest periodic image of a displacement
  double wrap(double d) const { return d - L * std::round(d / L); }

  bool operator==(const Grid& o) const { return L == o.L && M == o.M; }
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(double L, int M) { return std::make_shared<const Grid>(L, M); }

namespace detail {
inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> f;
  return f;
}
}  // namespace detail

// one component, M values -> M coefficients
inline VecC to_spectrum_1(const Grid& g, const VecC& psi) {
  std::vector<cplx> in(psi.data(), psi.data() + g.M), out;
  detail::fft_engine().fwd(out, in);
  VecC c(g.M);
  const double s = g.dx() / std::sqrt(g.L);
  for (int p = 0; p < g.M; ++p) c[p] = (p % 2 ? -s : s) * out[p];
  return c;
}

inline VecC from_spectrum_1(const Grid& g, const VecC& c) {
  std::vector<cplx> in(g.M), out;
  for (int p = 0; p < g.M; ++p) in[p] = (p % 2 ? -1.0 : 1.0) * c[p];
  detail::fft_engine().inv(out, in);
  VecC psi(g.M);
  const double s = g.M / std::sqrt(g.L);
  for (int j = 0; j < g.M; ++j) psi[j] = s * out[j];
  return psi;
}

inline VecC to_spectrum(const Grid& g, const VecC& v) {
  const int C = static_cast<int>(v.size() / g.M);
  VecC out(v.size());
  for (int c = 0; c < C; ++c) out.segment(c * g.M, g.M) = to_spectrum_1(g, v.segment(c * g.M, g.M));
  return out;
}

inline VecC from_spectrum(const Grid& g, const VecC& v) {
  const int C = static_cast<int>(v.size() / g.M);
  VecC out(v.size());
  for (int c = 0; c < C; ++c) out.segment(c * g.M, g.M) = from_spectrum_1(g, v.segment(c * g.M, g.M));
  return out;
}

// C-component field on the plane t = const
template <int C>
struct LabField {
  static constexpr int components = C;
  GridPtr grid;
  double t = 0.0;
  VecC values;

  LabField() = default;
  LabField(GridPtr g, double time) : grid(std::move(g)), t(time), values(VecC::Zero(C * grid->M)) {}
  LabField(GridPtr g, double time, VecC v) : grid(std::move(g)), t(time), values(std::move(v)) {
    if (values.size() != C * grid->M) throw SimulationError(ErrorKind::ConfigError, "field size does not match grid");
  }

  int M() const { return grid->M; }
  cplx& at(int c, int j) { return values[c * grid->M + j]; }
  cplx at(int c, int j) const { return values[c * grid->M + j]; }
  double density(int j) const {
    double s = 0;
    for (int c = 0; c < C; ++c) s += std::norm(at(c, j));
    return s;
  }
  VecC spectrum() const { return to_spectrum(*grid, values); }
  static LabField from_spectrum_at(GridPtr g, double time, const VecC& coef) {
    return LabField(g, time, from_spectrum(*g, coef));
  }
};

using SpinorField = LabField<2>;
using ScalarField = LabField<1>;

template <int C>
cplx plane_inner_product(const LabField<C>& f, const LabField<C>& g) {
  if (!(*f.grid == *g.grid) || f.t != g.t)
    throw SimulationError(ErrorKind::SurfaceMismatch, "fields live on different planes");
  return f.values.dot(g.values) * f.grid->dx();
}

template <int C>
double plane_norm2(const LabField<C>& f) {
  return f.values.squaredNorm() * f.grid->dx();
}

template <int C>
LabField<C> normalized(LabField<C> f) {
  const double n = std::sqrt(plane_norm2(f));
  if (!(n > 0)) throw SimulationError(ErrorKind::ZeroNorm, "cannot normalize a zero field");
  f.values /= n;
  return f;
}

// Gaussian packet with |psi|^2 standard deviation `width`, mean momentum k0,
// constant internal vector `spin` (normalized internally).
template <int C>
LabField<C> gaussian_packet(GridPtr g, double t, double x0, double width, double k0,
                            const Eigen::Matrix<cplx, C, 1>& spin) {
  LabField<C> f(g, t);
  const Eigen::Matrix<cplx, C, 1> s = spin.normalized();
  for (int j = 0; j < g->M; ++j) {
    const double d = g->wrap(g->x(j) - x0);
    const cplx a = std::exp(-d * d / (4 * width * width)) * std::exp(cplx(0, k0 * d));
    for (int c = 0; c < C; ++c) f.at(c, j) = a * s[c];
  }
  return normalized(f);
}

inline SpinorField gaussian_spinor(GridPtr g, double t, double x0, double width, double k0 = 0.0,
                                   cplx up = 1.0, cplx down = 0.0) {
  return gaussian_packet<2>(g, t, x0, width, k0, Eigen::Matrix<cplx, 2, 1>(up, down));
}

inline ScalarField gaussian_scalar(GridPtr g, double t, double x0, double width, double k0 = 0.0) {
  return gaussian_packet<1>(g, t, x0, width, k0, Eigen::Matrix<cplx, 1, 1>(1.0));
}

// Spatial interval [lo, hi] outside of which relative density is below tol,
// and momentum cutoff beyond which spectral mass fraction is below tol.
struct SupportInfo {
  double x_lo = 0, x_hi = 0;
  double k_max = 0;
  bool touches_boundary = false;
};

template <int C>
SupportInfo support_of(const LabField<C>& f, double density_tol = 1e-20, double spectral_tol = 1e-26) {
  const Grid& g = *f.grid;
  SupportInfo s;
  double dmax = 0;
  for (int j = 0; j < g.M; ++j) dmax = std::max(dmax, f.density(j));
  int lo = g.M, hi = -1;
  for (int j = 0; j < g.M; ++j)
    if (f.density(j) > density_tol * dmax) {
      lo = std::min(lo, j);
      hi = std::max(hi, j);
    }
  if (hi < 0) throw SimulationError(ErrorKind::ZeroNorm, "field has no support");
  s.x_lo = g.x(lo);
  s.x_hi = g.x(hi);
  s.touches_boundary = (lo == 0 || hi == g.M - 1);
  const VecC c = f.spectrum();
  // spectral mass per |k| shell, accumulated from the outside in
  std::vector<double> shell(g.M / 2 + 1, 0.0);
  double total = 0;
  for (int comp = 0; comp < C; ++comp)
    for (int p = 0; p < g.M; ++p) {
      const int n = p < g.M / 2 ? p : g.M - p;
      const double w = std::norm(c[comp * g.M + p]);
      shell[n] += w;
      total += w;
    }
  double tail = 0;
  int kmax = g.M / 2;
  for (int n = g.M / 2; n >= 0; --n) {
    if (tail + shell[n] > spectral_tol * total) {
      kmax = n;
      break;
    }
    tail += shell[n];
  }
  s.k_max = kmax * g.dk();
  return s;
}

// spectral mass fraction above a fraction of the Nyquist wavenumber
template <int C>
double high_band_fraction(const LabField<C>& f, double band = 0.75) {
  const Grid& g = *f.grid;
  const VecC c = f.spectrum();
  double tot = 0, hi = 0;
  for (int comp = 0; comp < C; ++comp)
    for (int p = 0; p < g.M; ++p) {
      const double w = std::norm(c[comp * g.M + p]);
      tot += w;
      if (std::abs(g.k(p)) > band * g.k_nyquist()) hi += w;
    }
  return tot > 0 ? hi / tot : 0.0;
}

// mass within `margin` of the periodic seam at x = +-L/2
template <int C>
double seam_mass(const LabField<C>& f, double margin) {
  const Grid& g = *f.grid;
  double s = 0;
  for (int j = 0; j < g.M; ++j)
    if (std::abs(g.x(j)) > 0.5 * g.L - margin) s += f.density(j);
  return s * g.dx();
}

}  // namespace grwf
