#pragma once

// 1+1D Dirac evolution in the representation gamma^0 = sigma_3, gamma^1 = i sigma_2:
//   i d_t psi = (-i sigma_1 d_x + m sigma_3 + V(t, x)) psi,    H(k) = k sigma_1 + m sigma_3.
// V is the potential energy e A_0 (A_1 = 0).
//
// Free fields are evaluated anywhere in space-time directly from their
// spectral coefficients. With a potential, the field is advanced by Strang
// splitting and stored on a ladder of slices in the interaction picture
// (coefficients pulled back by the free propagator); off-slice values use
// cubic interpolation in t and band-limited evaluation in x.

#include <functional>
#include <map>
#include <mutex>

#include "grwf/surface.hpp"

namespace grwf {

using PotentialFn = std::function<double(double t, double x)>;

namespace detail {

struct Mode2 {
  cplx a00, a01, a10, a11;
};

// exp(-i H(k) s) for H = k sigma_1 + m sigma_3
inline Mode2 free_dirac_mode(double k, double m, double s) {
  const double E = std::sqrt(k * k + m * m);
  const double c = std::cos(E * s);
  const double sn = E > 0 ? std::sin(E * s) / E : s;
  const cplx mi(0, -sn);
  return {c + mi * m, mi * k, mi * k, c - mi * m};
}

inline void apply_mode(const Mode2& u, cplx& x0, cplx& x1) {
  const cplx y0 = u.a00 * x0 + u.a01 * x1;
  const cplx y1 = u.a10 * x0 + u.a11 * x1;
  x0 = y0;
  x1 = y1;
}

inline void apply_mode_adjoint(const Mode2& u, cplx& x0, cplx& x1) {
  const cplx y0 = std::conj(u.a00) * x0 + std::conj(u.a10) * x1;
  const cplx y1 = std::conj(u.a01) * x0 + std::conj(u.a11) * x1;
  x0 = y0;
  x1 = y1;
}

// modes ordered by signed index from -P to P within the active band
struct Band {
  std::vector<int> index;  // FFT index
  int first = 0;           // signed index of the first mode
};

inline Band make_band(const Grid& g, double kmax) {
  Band b;
  int P = static_cast<int>(std::ceil(kmax / g.dk()));
  P = std::min(P, g.M / 2 - 1);
  b.first = -P;
  for (int n = -P; n <= P; ++n) b.index.push_back(n >= 0 ? n : n + g.M);
  return b;
}

}  // namespace detail

// Apply the free propagator over duration s to spectral coefficients.
inline void free_dirac_spectral_step(const Grid& g, double mass, double s, VecC& c) {
  for (int p = 0; p < g.M; ++p) {
    const auto u = detail::free_dirac_mode(g.k(p), mass, s);
    detail::apply_mode(u, c[p], c[g.M + p]);
  }
}

struct DiracOptions {
  double dt = 0.01;           // split-step size
  int steps_per_slice = 5;    // ladder slice spacing in split steps
  double grid_tail_tol = 1e-6;
  double support_margin = 8.0;
};

// Solution of the one-particle equation through a given lab field.
class DiracSolution {
 public:
  virtual ~DiracSolution() = default;
  // values at events (t[z], x[z]), node-major
  virtual VecC evaluate(const std::vector<double>& t, const std::vector<double>& x) const = 0;
  // adjoint of evaluate: sum_z E_z^dagger b_z, returned as a lab field
  virtual SpinorField adjoint(const std::vector<double>& t, const std::vector<double>& x, const VecC& b) const = 0;
  // spatial interval that may carry non-negligible density at time t
  virtual std::pair<double, double> region(double t) const = 0;
  virtual double base_time() const = 0;
};

class FreeDiracSolution final : public DiracSolution {
 public:
  FreeDiracSolution(const SpinorField& f, double mass, const DiracOptions& opt = {})
      : grid_(f.grid), mass_(mass), t0_(f.t), coef_(f.spectrum()), opt_(opt) {
    sup_ = support_of(f);
    band_ = detail::make_band(*grid_, sup_.k_max);
    vmax_ = sup_.k_max / std::sqrt(sup_.k_max * sup_.k_max + mass * mass);
    for (int p : band_.index) {
      const double k = grid_->k(p);
      kb_.push_back(k);
      energy_.push_back(std::sqrt(k * k + mass * mass));
      ca_.push_back(coef_[p]);
      cb_.push_back(coef_[grid_->M + p]);
    }
  }

  VecC evaluate(const std::vector<double>& t, const std::vector<double>& x) const override {
    const Grid& g = *grid_;
    const int K = static_cast<int>(t.size());
    const int B = static_cast<int>(band_.index.size());
    VecC out(2 * K);
    const double norm = 1.0 / std::sqrt(g.L);
    for (int z = 0; z < K; ++z) {
      const double s = t[z] - t0_;
      cplx ph = std::polar(norm, band_.first * g.dk() * x[z]);
      const cplx step = std::polar(1.0, g.dk() * x[z]);
      cplx v0 = 0, v1 = 0;
      for (int b = 0; b < B; ++b) {
        const double E = energy_[b], k = kb_[b];
        const double c = std::cos(E * s);
        const double sn = E > 0 ? std::sin(E * s) / E : s;
        const cplx a = ca_[b], d = cb_[b];
        // exp(-i H s) (a, d)
        const cplx w0 = c * a - cplx(0, sn) * (mass_ * a + k * d);
        const cplx w1 = c * d - cplx(0, sn) * (k * a - mass_ * d);
        v0 += ph * w0;
        v1 += ph * w1;
        ph *= step;
      }
      out[2 * z] = v0;
      out[2 * z + 1] = v1;
    }
    return out;
  }

  SpinorField adjoint(const std::vector<double>& t, const std::vector<double>& x, const VecC& b) const override {
    return adjoint_at(t, x, b, t0_);
  }

  // adjoint with the result expressed on the plane t_out
  SpinorField adjoint_at(const std::vector<double>& t, const std::vector<double>& x, const VecC& b, double t_out) const {
    const Grid& g = *grid_;
    const int K = static_cast<int>(t.size());
    VecC c = VecC::Zero(2 * g.M);
    const double norm = 1.0 / std::sqrt(g.L);
    const int P = g.M / 2;
    for (int z = 0; z < K; ++z) {
      const double s = t[z] - t_out;
      cplx ph = std::polar(norm, P * g.dk() * x[z]);  // exp(-i k x) at k = -P dk
      const cplx step = std::polar(1.0, -g.dk() * x[z]);
      for (int n = -P; n < P; ++n) {
        const int p = n >= 0 ? n : n + g.M;
        cplx a = ph * b[2 * z], d = ph * b[2 * z + 1];
        detail::apply_mode_adjoint(detail::free_dirac_mode(g.k(p), mass_, s), a, d);
        c[p] += a;
        c[g.M + p] += d;
        ph *= step;
      }
    }
    return SpinorField::from_spectrum_at(grid_, t_out, c);
  }

  std::pair<double, double> region(double t) const override {
    const double spread = vmax_ * std::abs(t - t0_) + opt_.support_margin;
    return {sup_.x_lo - spread, sup_.x_hi + spread};
  }
  double base_time() const override { return t0_; }
  const SupportInfo& support() const { return sup_; }

 private:
  GridPtr grid_;
  double mass_, t0_;
  VecC coef_;
  DiracOptions opt_;
  SupportInfo sup_;
  detail::Band band_;
  std::vector<double> kb_, energy_;
  std::vector<cplx> ca_, cb_;
  double vmax_ = 1.0;
};

namespace detail {

// one Strang step c -> exp(-iV dt/2) K(dt) exp(-iV dt/2) c on spectral coefficients,
// potential evaluated at the step midpoint; sign = -1 gives the adjoint step
inline void strang_step(const Grid& g, double mass, const PotentialFn& V, double t_mid, double dt, double sign,
                        VecC& c) {
  auto half_potential = [&](VecC& spec) {
    VecC psi = from_spectrum(g, spec);
    for (int j = 0; j < g.M; ++j) {
      const cplx ph = std::polar(1.0, -sign * V(t_mid, g.x(j)) * 0.5 * dt);
      psi[j] *= ph;
      psi[g.M + j] *= ph;
    }
    spec = to_spectrum(g, psi);
  };
  half_potential(c);
  free_dirac_spectral_step(g, mass, sign * dt, c);
  half_potential(c);
}

}  // namespace detail

class LadderDiracSolution final : public DiracSolution {
 public:
  LadderDiracSolution(const SpinorField& f, double mass, PotentialFn V, const DiracOptions& opt = {})
      : grid_(f.grid), mass_(mass), V_(std::move(V)), t0_(f.t), opt_(opt) {
    sup_ = support_of(f);
    slices_.push_back(f.spectrum());
    last_ = slices_.back();
  }

  double slice_dt() const { return opt_.dt * opt_.steps_per_slice; }

  VecC evaluate(const std::vector<double>& t, const std::vector<double>& x) const override {
    const Grid& g = *grid_;
    const int K = static_cast<int>(t.size());
    double tmax = t0_;
    for (double v : t) tmax = std::max(tmax, v);
    ensure(tmax);
    VecC out(2 * K);
    const double norm = 1.0 / std::sqrt(g.L);
    VecC ct(2 * g.M);
    for (int z = 0; z < K; ++z) {
      int n0;
      double l[4];
      stencil(t[z], n0, l);
      ct.setZero();
      for (int q = 0; q < 4; ++q) ct += l[q] * slice_ip(n0 + q);
      const double s = t[z] - t0_;
      const int P = g.M / 2;
      cplx ph = std::polar(norm, -P * g.dk() * x[z]);
      const cplx step = std::polar(1.0, g.dk() * x[z]);
      cplx v0 = 0, v1 = 0;
      for (int n = -P; n < P; ++n) {
        const int p = n >= 0 ? n : n + g.M;
        cplx a = ct[p], c = ct[g.M + p];
        detail::apply_mode(detail::free_dirac_mode(g.k(p), mass_, s), a, c);
        v0 += ph * a;
        v1 += ph * c;
        ph *= step;
      }
      out[2 * z] = v0;
      out[2 * z + 1] = v1;
    }
    return out;
  }

  SpinorField adjoint(const std::vector<double>& t, const std::vector<double>& x, const VecC& b) const override {
    const Grid& g = *grid_;
    const int K = static_cast<int>(t.size());
    double tmax = t0_;
    for (double v : t) tmax = std::max(tmax, v);
    ensure(tmax);
    std::map<int, VecC> src;  // interaction-picture sources per slice
    const double norm = 1.0 / std::sqrt(g.L);
    const int P = g.M / 2;
    VecC acc_z(2 * g.M);
    for (int z = 0; z < K; ++z) {
      const double s = t[z] - t0_;
      cplx ph = std::polar(norm, P * g.dk() * x[z]);
      const cplx step = std::polar(1.0, -g.dk() * x[z]);
      for (int n = -P; n < P; ++n) {
        const int p = n >= 0 ? n : n + g.M;
        cplx a = ph * b[2 * z], d = ph * b[2 * z + 1];
        detail::apply_mode_adjoint(detail::free_dirac_mode(g.k(p), mass_, s), a, d);
        acc_z[p] = a;
        acc_z[g.M + p] = d;
        ph *= step;
      }
      int n0;
      double l[4];
      stencil(t[z], n0, l);
      for (int q = 0; q < 4; ++q) {
        auto it = src.find(n0 + q);
        if (it == src.end()) it = src.emplace(n0 + q, VecC::Zero(2 * g.M)).first;
        it->second += l[q] * acc_z;
      }
    }
    if (src.empty()) return SpinorField(grid_, t0_);
    // back to the Schroedinger picture on each slice, then sweep down the ladder
    const int top = src.rbegin()->first;
    VecC acc = VecC::Zero(2 * g.M);
    for (int n = top; n >= 0; --n) {
      auto it = src.find(n);
      if (it != src.end()) {
        VecC sn = it->second;
        free_dirac_spectral_step(g, mass_, n * slice_dt(), sn);
        acc += sn;
      }
      if (n > 0) {
        for (int k = opt_.steps_per_slice - 1; k >= 0; --k) {
          const double tm = t0_ + (n - 1) * slice_dt() + (k + 0.5) * opt_.dt;
          detail::strang_step(g, mass_, V_, tm, opt_.dt, -1.0, acc);
        }
      }
    }
    return SpinorField::from_spectrum_at(grid_, t0_, acc);
  }

  std::pair<double, double> region(double t) const override {
    const double spread = std::abs(t - t0_) + opt_.support_margin;
    return {sup_.x_lo - spread, sup_.x_hi + spread};
  }
  double base_time() const override { return t0_; }
  int slice_count() const {
    std::lock_guard<std::mutex> lk(mu_);
    return static_cast<int>(slices_.size());
  }

 private:
  // cubic Lagrange stencil over slices n0..n0+3
  void stencil(double t, int& n0, double l[4]) const {
    const double u = (t - t0_) / slice_dt();
    if (u < -1e-9) throw SimulationError(ErrorKind::WindowExceeded, "event precedes the stored field history");
    n0 = std::max(0, static_cast<int>(std::floor(u)) - 1);
    const double v = u - n0;
    l[0] = -(v - 1) * (v - 2) * (v - 3) / 6.0;
    l[1] = v * (v - 2) * (v - 3) / 2.0;
    l[2] = -v * (v - 1) * (v - 3) / 2.0;
    l[3] = v * (v - 1) * (v - 2) / 6.0;
  }

  // interaction-picture coefficients of slice n
  VecC slice_ip(int n) const {
    std::lock_guard<std::mutex> lk(mu_);
    return slices_[n];
  }

  void ensure(double tmax) const {
    const int need = static_cast<int>(std::ceil((tmax - t0_) / slice_dt())) + 4;
    std::lock_guard<std::mutex> lk(mu_);
    const Grid& g = *grid_;
    while (static_cast<int>(slices_.size()) < need) {
      const int n = static_cast<int>(slices_.size());
      for (int k = 0; k < opt_.steps_per_slice; ++k) {
        const double tm = t0_ + (n - 1) * slice_dt() + (k + 0.5) * opt_.dt;
        detail::strang_step(g, mass_, V_, tm, opt_.dt, 1.0, last_);
      }
      VecC ip = last_;
      free_dirac_spectral_step(g, mass_, -n * slice_dt(), ip);
      slices_.push_back(std::move(ip));
    }
  }

  GridPtr grid_;
  double mass_;
  PotentialFn V_;
  double t0_;
  DiracOptions opt_;
  SupportInfo sup_;
  mutable std::mutex mu_;
  mutable std::vector<VecC> slices_;
  mutable VecC last_;
};

// Particle species: mass, optional potential, numerical options.
class DiracParticle {
 public:
  using Field = SpinorField;

  explicit DiracParticle(double mass, PotentialFn V = {}, DiracOptions opt = {})
      : mass_(mass), V_(std::move(V)), opt_(opt) {}

  double mass() const { return mass_; }
  bool has_potential() const { return static_cast<bool>(V_); }
  const PotentialFn& potential() const { return V_; }
  const DiracOptions& options() const { return opt_; }

  void check_resolution(const SpinorField& f) const {
    const double tail = high_band_fraction(f);
    if (tail > opt_.grid_tail_tol)
      throw SimulationError(ErrorKind::GridTooCoarse,
                            "spectral mass above 3/4 Nyquist is " + std::to_string(tail));
  }

  // check = false skips the momentum-tail test (for states whose band
  // truncation is controlled elsewhere)
  SpinorField propagate(const SpinorField& f, double t_target, bool check = true) const {
    if (check) check_resolution(f);
    if (t_target == f.t) return f;
    const Grid& g = *f.grid;
    VecC c = f.spectrum();
    if (!V_) {
      free_dirac_spectral_step(g, mass_, t_target - f.t, c);
    } else {
      const double span = t_target - f.t;
      const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / opt_.dt - 1e-9)));
      const double dt = span / n;
      for (int k = 0; k < n; ++k) {
        const double tm = f.t + (k + 0.5) * dt;
        // a negative dt runs the same symmetric step backwards
        detail::strang_step(g, mass_, V_, tm, std::abs(dt), dt > 0 ? 1.0 : -1.0, c);
      }
    }
    return SpinorField::from_spectrum_at(f.grid, t_target, c);
  }

  std::shared_ptr<const DiracSolution> solution(const std::shared_ptr<const SpinorField>& f, bool check = true) const {
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto& slot = cache_->entries[f.get()];
    if (auto s = slot.second.lock(); s && slot.first.lock() == f) return s;
    if (check) check_resolution(*f);
    std::shared_ptr<const DiracSolution> s;
    if (V_)
      s = std::make_shared<LadderDiracSolution>(*f, mass_, V_, opt_);
    else
      s = std::make_shared<FreeDiracSolution>(*f, mass_, opt_);
    slot = {f, s};
    cache_->keep.push_back(s);
    if (cache_->keep.size() > 64) cache_->keep.erase(cache_->keep.begin());
    return s;
  }

 private:
  struct Cache {
    std::mutex mu;
    std::map<const void*, std::pair<std::weak_ptr<const SpinorField>, std::weak_ptr<const DiracSolution>>> entries;
    std::vector<std::shared_ptr<const DiracSolution>> keep;  // recently used solutions stay alive
  };
  double mass_;
  PotentialFn V_;
  DiracOptions opt_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// momentum-space projection onto the positive branch of the free Hamiltonian
inline SpinorField positive_energy_project(const SpinorField& f, double mass) {
  const Grid& g = *f.grid;
  VecC c = f.spectrum();
  for (int p = 0; p < g.M; ++p) {
    const double k = g.k(p);
    const double E = std::sqrt(k * k + mass * mass);
    if (E == 0) continue;
    const cplx a = c[p], b = c[g.M + p];
    c[p] = 0.5 * ((1 + mass / E) * a + (k / E) * b);
    c[g.M + p] = 0.5 * ((k / E) * a + (1 - mass / E) * b);
  }
  return SpinorField::from_spectrum_at(f.grid, f.t, c);
}

// Restriction of a lab solution to hyperboloid nodes.
struct RestrictionResult {
  SurfaceSpinor field;
  double norm_deficit = 0;  // |1 - <f,f>_H| when the source is normalized
};

inline RestrictionResult restrict_to_hyperboloid(const DiracSolution& sol, const NodesPtr& nodes,
                                                 double source_norm2 = 1.0) {
  RestrictionResult r;
  r.field.nodes = nodes;
  r.field.values = sol.evaluate(nodes->t, nodes->x);
  r.norm_deficit = std::abs(source_norm2 - surface_norm2(r.field));
  return r;
}

// Lab field whose solution restricts (approximately) to the given surface data:
// the adjoint of the restriction map applied to the hyperboloid field.
inline SpinorField extend_from_hyperboloid(const DiracSolution& sol, const SurfaceSpinor& f, double t_out) {
  const HyperboloidNodes& n = *f.nodes;
  VecC b(2 * n.size());
  for (int z = 0; z < n.size(); ++z) {
    apply_metric(n.chi[z], f.at(z), b.data() + 2 * z);
    b[2 * z] *= n.w[z];
    b[2 * z + 1] *= n.w[z];
  }
  if (auto* fs = dynamic_cast<const FreeDiracSolution*>(&sol)) return fs->adjoint_at(n.t, n.x, b, t_out);
  return sol.adjoint(n.t, n.x, b);
}

// Node set for restricting the given solutions to h: spatial offsets within
// one period around the centre (a closed Cauchy surface of the periodic box)
// limited to the union of the solutions' support regions and their images.
inline HyperboloidNodes support_nodes(const Hyperboloid& h, const Grid& g,
                                      const std::vector<const DiracSolution*>& sols, const NodeOptions& o,
                                      bool* touches_box = nullptr) {
  HyperboloidNodes all = make_nodes(h, -0.5 * g.L, 0.5 * g.L, o, true);
  HyperboloidNodes kept = trim_nodes(all, [&](double t, double x) {
    for (auto* s : sols) {
      auto [lo, hi] = s->region(t);
      // the field is periodic: any image of x may carry the support
      const int kmin = static_cast<int>(std::ceil((lo - x) / g.L)), kmax = static_cast<int>(std::floor((hi - x) / g.L));
      if (kmin <= kmax) return true;
    }
    return false;
  });
  if (touches_box) {
    *touches_box = kept.size() > 0 && all.size() > 0 &&
                   (kept.u.front() == all.u.front() || kept.u.back() == all.u.back());
  }
  return kept;
}

// Free boosted state: psi'(x') = S(eta) psi(t = -x' sinh eta, x = x' cosh eta)
// on the plane t' = 0 of the boosted frame, S(eta) = cosh(eta/2) + sinh(eta/2) sigma_1.
// The boost is about the origin; the source may sit on any plane.
inline SpinorField boost_free_state(const SpinorField& f, double mass, double eta) {
  const Grid& g = *f.grid;
  FreeDiracSolution sol(f, mass);
  std::vector<double> t(g.M), x(g.M);
  for (int j = 0; j < g.M; ++j) {
    // boosted coordinates (t'=0, x') come from lab (t, x) = (-x' sinh eta, x' cosh eta) for a passive boost by -eta
    t[j] = -g.x(j) * std::sinh(eta);
    x[j] = g.x(j) * std::cosh(eta);
  }
  VecC v = sol.evaluate(t, x);
  SpinorField out(f.grid, 0.0);
  const double ch = std::cosh(0.5 * eta), sh = std::sinh(0.5 * eta);
  for (int j = 0; j < g.M; ++j) {
    const cplx a = v[2 * j], b = v[2 * j + 1];
    out.at(0, j) = ch * a + sh * b;
    out.at(1, j) = ch * b + sh * a;
  }
  return out;
}

}  // namespace grwf
