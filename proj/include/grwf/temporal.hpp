#pragma once

// Flash process in the lab slicing t = const. Between flashes the tuple
// (psi, last flash of every label) is fixed; the flash rate of label I at
// lab time t is
//   Lambda_I(t) = <psi| N_I(t) (x) prod_{i != I} D_i(t) |psi> / <psi| prod_i D_i(t) |psi>
// where D_i(t) is the form of "next flash of i beyond the slice" and N_I the
// slice integral of (1/tau) e^{-r/tau} jhat(y)^2. A slice point y = X + (t', u)
// is parametrized by u = t' sin(theta), r = t' cos(theta), rapidity asinh(tan theta).
// Events are drawn by thinning a constant-rate proposal process.

#include <cmath>
#include <limits>
#include <array>
#include <map>
#include <mutex>
#include <memory>
#include <vector>

#include "grwf/flash.hpp"
#include "grwf/povm.hpp"

namespace grwf {

struct TemporalOptions {
  double kappa = 4.0;         // proposal rate kappa * N / tau
  int max_restarts = 12;      // envelope doublings before giving up
  int panel_order = 8;        // Gauss-Legendre nodes per panel in theta
  double end_panel = 0.05;    // first panel width at either end, in units of a / t'
  int position_points = 256;  // minimum tabulation points per branch of the slice
  double position_spacing = 0.25;  // tabulation spacing in theta, in units of a / t'
  double ladder_step = 0.25;  // largest radius step of the surface ladder, in units of a
  double ladder_phase = 0.5;  // and at most this phase of the rest-energy beat, in units of 1/m
  double max_panel = 2.0;     // largest theta panel, in units of a / t'
  double ladder_ratio = 0.08; // relative radius step near the apex
  double s_step = 1.0 / 16;   // tabulation step in sigma, in units of a
  size_t cache_size = 16;     // ladders kept across calls
};

// label-i flash rate data at one lab time
struct SliceForms {
  std::vector<MatC> beyond;  // term-indexed D_i(t)
  std::vector<MatC> rate;    // term-indexed N_i(t)
};

// Densities of one label's distinct factors on hyperboloids H(X, r), tabulated
// in s >= 0: the form of flashes beyond |sigma| = s and the smeared densities
// at sigma = +s and -s. Radii sit on a fixed ladder (geometric near the apex,
// then uniform); rows are built on first use and interpolated in r and s.
class SurfaceLadder {
 public:
  SurfaceLadder(std::vector<std::shared_ptr<const DiracSolution>> sols, GridPtr grid, const SpacetimePoint& X,
                double a, double cut, const NodeOptions& nodes, double r_min, double step, const TemporalOptions& o)
      : sols_(std::move(sols)), grid_(std::move(grid)), X_(X), a_(a), cut_(cut), nodes_(nodes), o_(o),
        r0_(r_min), step_(step) {
    K_ = static_cast<int>(sols_.size());
    const double ratio = std::min(o_.ladder_ratio, step_ / r0_);
    q_ = std::log1p(ratio);
    kg_ = std::max(0, static_cast<int>(std::ceil(std::log(step_ / (ratio * r0_)) / q_)));
    rg_ = r0_ * std::exp(q_ * kg_);
  }

  int factors() const { return K_; }
  size_t rows_built() const { return rows_.size(); }

  double radius(int k) const { return k <= kg_ ? r0_ * std::exp(q_ * k) : rg_ + (k - kg_) * step_; }
  int index(double r) const {
    if (r <= rg_) return static_cast<int>(std::floor(std::log(r / r0_) / q_ + 1e-12));
    return kg_ + static_cast<int>(std::floor((r - rg_) / step_ + 1e-12));
  }

  // interpolated forms at radius r >= r_min and s >= 0 (distinct-factor indexed, K x K)
  void at(double r, double s, MatC* beyond, MatC* kp, MatC* km) {
    const int KK = K_ * K_;
    VecC b = VecC::Zero(KK), p = VecC::Zero(KK), m = VecC::Zero(KK);
    // no node reaches |sigma| beyond r asinh(L / 2r) (chi_max permitting)
    const double reach = r * std::asinh(0.5 * grid_->L / r) + cut_ + 4 * o_.s_step * a_;
    if (s <= 1.2 * reach) {
      const int k0 = std::max(0, index(r) - 1);
      for (int i = 0; i < 4; ++i) {
        double lw = 1;
        for (int j = 0; j < 4; ++j)
          if (j != i) lw *= (r - radius(k0 + j)) / (radius(k0 + i) - radius(k0 + j));
        row_at(row(k0 + i), s, lw, b, p, m);
      }
    }
    if (beyond) *beyond = Eigen::Map<MatC>(b.data(), K_, K_);
    if (kp) *kp = Eigen::Map<MatC>(p.data(), K_, K_);
    if (km) *km = Eigen::Map<MatC>(m.data(), K_, K_);
  }

 private:
  struct Row {
    int lead = 2;    // grid points below s = 0
    MatC B, Kp, Km;  // (points) x (K * K)
  };

  const Row& row(int k) {
    auto it = rows_.find(k);
    if (it == rows_.end()) it = rows_.emplace(k, make_row(radius(k))).first;
    return it->second;
  }

  Row make_row(double r) const {
    const Grid& g = *grid_;
    const Hyperboloid h(X_, r);
    const HyperboloidNodes n = make_nodes(h, -0.5 * g.L, 0.5 * g.L, nodes_, true);
    const int Z = n.size();
    MatC G(2 * Z, K_);
    for (int k = 0; k < K_; ++k) G.col(k) = sols_[k]->evaluate(n.t, n.x);
    double smax = 0;
    for (int z = 0; z < Z; ++z) {
      smax = std::max(smax, std::abs(n.sigma(z)));
      const double c = std::cosh(0.5 * n.chi[z]), sh = std::sinh(0.5 * n.chi[z]), sw = std::sqrt(n.w[z]);
      for (int k = 0; k < K_; ++k) {
        const cplx p = G(2 * z, k), q = G(2 * z + 1, k);
        G(2 * z, k) = sw * (c * p - sh * q);
        G(2 * z + 1, k) = sw * (c * q - sh * p);
      }
    }
    // per-node Gram densities, flattened column-major
    MatC P(Z, K_ * K_);
    for (int z = 0; z < Z; ++z) {
      const MatC gz = G.middleRows(2 * z, 2);
      const MatC pz = gz.adjoint() * gz;
      P.row(z) = Eigen::Map<const VecC>(pz.data(), K_ * K_).transpose();
    }
    Row w;
    const double ds = o_.s_step * a_;
    const int pts = w.lead + static_cast<int>(std::ceil((smax + cut_) / ds)) + 3;
    Eigen::MatrixXd Wb = Eigen::MatrixXd::Zero(pts, Z), Wp = Wb, Wm = Wb;
    const double K2 = 1.0 / (std::sqrt(M_PI) * a_);
    auto s_of = [&](int j) { return (j - w.lead) * ds; };
    auto j_of = [&](double s) { return std::clamp(static_cast<int>(std::floor(s / ds)) + w.lead, 0, pts - 1); };
    for (int z = 0; z < Z; ++z) {
      const double sz = n.sigma(z), az = std::abs(sz);
      // fully beyond below |sigma_z| - cut, nothing beyond above |sigma_z| + cut
      const int j1 = j_of(az - cut_), j2 = std::min(pts - 1, j_of(az + cut_) + 1);
      for (int j = 0; j < j1; ++j) Wb(j, z) = 1.0;
      for (int j = j1; j <= j2; ++j) {
        const double s = s_of(j);
        Wb(j, z) = 0.5 * std::erfc((s - sz) / a_) + 0.5 * std::erfc((s + sz) / a_);
        const double dp = (s - sz) / a_, dm = (s + sz) / a_;
        Wp(j, z) = K2 * std::exp(-dp * dp);
        Wm(j, z) = K2 * std::exp(-dm * dm);
      }
      // s slightly below zero sees both smeared images of a node near the apex
      for (int j = 0; j < std::min(j1, 2 * w.lead + 8); ++j) {
        const double s = s_of(j);
        const double dp = (s - sz) / a_, dm = (s + sz) / a_;
        Wb(j, z) = 0.5 * std::erfc(dp) + 0.5 * std::erfc(dm);
        Wp(j, z) = std::abs(dp) * a_ <= cut_ ? K2 * std::exp(-dp * dp) : 0.0;
        Wm(j, z) = std::abs(dm) * a_ <= cut_ ? K2 * std::exp(-dm * dm) : 0.0;
      }
    }
    w.B = Wb.cast<cplx>() * P;
    w.Kp = Wp.cast<cplx>() * P;
    w.Km = Wm.cast<cplx>() * P;
    return w;
  }

  void row_at(const Row& w, double s, double lw, VecC& b, VecC& p, VecC& m) const {
    const double ds = o_.s_step * a_;
    const double u = s / ds + w.lead;
    const int n = static_cast<int>(w.B.rows());
    int j0 = static_cast<int>(std::floor(u)) - 1;
    if (j0 + 3 >= n) return;  // beyond the surface plus cut: nothing left
    j0 = std::max(j0, 0);
    for (int i = 0; i < 4; ++i) {
      double c = lw;
      for (int j = 0; j < 4; ++j)
        if (j != i) c *= (u - (j0 + j)) / static_cast<double>(i - j);
      b += c * w.B.row(j0 + i).transpose();
      p += c * w.Kp.row(j0 + i).transpose();
      m += c * w.Km.row(j0 + i).transpose();
    }
  }

  std::vector<std::shared_ptr<const DiracSolution>> sols_;
  GridPtr grid_;
  SpacetimePoint X_;
  double a_, cut_;
  NodeOptions nodes_;
  TemporalOptions o_;
  int K_ = 0;
  double r0_, step_, q_ = 0, rg_ = 0;
  int kg_ = 0;
  std::map<int, Row> rows_;
};

class TemporalModel {
 public:
  using State = MultiTimeState<SpinorField>;

  TemporalModel(FlashModel flash, TemporalOptions opt = {})
      : flash_(std::move(flash)), opt_(opt), cache_(std::make_shared<Cache>()) {}

  const FlashModel& flash_model() const { return flash_; }
  const TemporalOptions& options() const { return opt_; }
  int labels() const { return flash_.labels(); }
  double tau() const { return flash_.tau(); }
  double a() const { return flash_.a(); }
  // waiting times below this are excluded, as in the hyperboloid sampler
  double r_floor() const { return flash_.r_floor(); }

  SliceForms slice_forms(const State& psi, const std::vector<SpacetimePoint>& X, double t) const {
    check(psi, X);
    SliceForms s;
    for (int i = 0; i < labels(); ++i) {
      const LabelData d = label_data(psi, i, X[i]);
      MatC D, R;
      label_forms(d, X[i], t, D, R);
      s.beyond.push_back(expand(d, D));
      s.rate.push_back(expand(d, R));
    }
    return s;
  }

  // probability weight of "no further flash before t" (unnormalized psi allowed)
  double no_flash_weight(const State& psi, const std::vector<SpacetimePoint>& X, double t) const {
    const SliceForms s = slice_forms(psi, X, t);
    return form(psi, s.beyond, -1, s.rate);
  }

  // total flash rate at lab time t; per-label rates in *per_label
  double total_rate(const State& psi, const std::vector<SpacetimePoint>& X, double t,
                    std::vector<double>* per_label = nullptr) const {
    const SliceForms s = slice_forms(psi, X, t);
    return rates_from(psi, s, per_label);
  }

  // rate density of a label-I flash at y on the slice t = y.t, per dt dx;
  // the jump factor is applied directly on the hyperboloid through y
  double temporal_rate(const State& psi, const std::vector<SpacetimePoint>& X, int I, const SpacetimePoint& y,
                       double gamma = 1.0) const {
    check(psi, X);
    State g = psi;
    for (auto& term : g.terms) term.coeff *= gamma;
    if (!in_future(X[I], y)) return 0.0;
    const double r = timelike_distance(X[I], y);
    if (r < r_floor()) return 0.0;
    const SliceForms s = slice_forms(g, X, y.t);
    const LabelData d = label_data(g, I, X[I]);
    const double sig = r * std::atanh((y.x[0] - X[I].x[0]) / (y.t - X[I].t));
    std::vector<MatC> num = s.beyond;
    num[I] = expand(d, point_form(d, Hyperboloid(X[I], r), sig) * (weight(r)));
    return form(g, num, -1, num) / form(g, s.beyond, -1, s.beyond);
  }

  // One flash drawn at a lab time after t_now; false if none before t_max.
  bool next_flash(const State& psi, const std::vector<SpacetimePoint>& X, double& t_now, double t_max,
                  double lambda_max, TrajectoryStreams& rs, int& label, FlashCoord& coord) const {
    for (;;) {
      t_now += rs.thinning.exponential(1.0 / lambda_max);
      if (!(t_now <= t_max)) return false;
      std::vector<double> per;
      const SliceForms s = slice_forms(psi, X, t_now);
      const double L = rates_from(psi, s, &per);
      if (!(L <= lambda_max))
        throw SimulationError(ErrorKind::BoundViolation, "flash rate " + std::to_string(L) + " above the envelope");
      if (rs.thinning.uniform() * lambda_max >= L) continue;
      double u = rs.label.uniform() * L;
      label = 0;
      while (label + 1 < labels() && u >= per[label]) u -= per[label++];
      coord = sample_slice_point(psi, X, label, t_now, s, rs.position);
      return true;
    }
  }

  struct RunOptions {
    double t_max = std::numeric_limits<double>::infinity();
    size_t max_flashes = 1;
    bool check_resolution = true;  // off for collapsed states supplied as initial data
  };

  FlashHistory run(const State& psi0, const std::vector<SpacetimePoint>& X0, const RunOptions& ro,
                   std::uint64_t seed, std::uint64_t trajectory, int* restarts = nullptr) const {
    double lambda = opt_.kappa * labels() / tau();
    for (int k = 0;; ++k) {
      try {
        FlashHistory h = run_once(psi0, X0, ro, seed, trajectory, k, lambda);
        if (restarts) *restarts = k;
        return h;
      } catch (const SimulationError& e) {
        if (e.kind() != ErrorKind::BoundViolation || k >= opt_.max_restarts) throw;
        lambda *= 2;
      }
    }
  }

  static double slice_rapidity(double theta) { return std::asinh(std::tan(theta)); }

 private:
  struct LabelData {
    GridPtr grid;
    std::vector<std::shared_ptr<const DiracSolution>> sols;
    std::vector<int> column;  // term -> distinct factor
    MatC gram;                // distinct factors on the lab plane
    std::shared_ptr<SurfaceLadder> ladder;
  };

  struct Cache {
    std::mutex mu;
    // key: distinct solutions and the last flash
    std::vector<std::pair<std::pair<std::vector<const DiracSolution*>, std::array<double, 2>>,
                          std::shared_ptr<SurfaceLadder>>>
        entries;  // most recent last
  };

  void check(const State& psi, const std::vector<SpacetimePoint>& X) const {
    if (psi.particles() != labels() || static_cast<int>(X.size()) != labels())
      throw SimulationError(ErrorKind::ConfigError, "state, particles and flashes disagree in number");
  }

  // (1/tau) e^{-r/tau}, renormalized for the excluded waiting times below r_floor
  double weight(double r) const { return std::exp(-(r - r_floor()) / tau()) / tau(); }

  LabelData label_data(const State& psi, int i, const SpacetimePoint& X) const {
    LabelData d;
    std::map<const SpinorField*, int> seen;
    std::vector<const SpinorField*> fs;
    for (const auto& term : psi.terms) {
      const auto& f = term.factors[i];
      auto it = seen.find(f.get());
      if (it == seen.end()) {
        it = seen.emplace(f.get(), static_cast<int>(fs.size())).first;
        fs.push_back(f.get());
        d.sols.push_back(flash_.particles()[i].solution(f, false));
      }
      d.column.push_back(it->second);
    }
    d.grid = fs.front()->grid;
    const int K = static_cast<int>(fs.size());
    d.gram.resize(K, K);
    for (int p = 0; p < K; ++p)
      for (int q = 0; q < K; ++q) d.gram(p, q) = plane_inner_product(*fs[p], *fs[q]);
    std::vector<const DiracSolution*> key;
    for (auto& s : d.sols) key.push_back(s.get());
    const std::array<double, 2> xk{X.t, X.x[0]};
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto& E = cache_->entries;
    for (size_t k = 0; k < E.size(); ++k)
      if (E[k].first.first == key && E[k].first.second == xk) {
        d.ladder = E[k].second;
        std::rotate(E.begin() + k, E.begin() + k + 1, E.end());
        return d;
      }
    d.ladder = std::make_shared<SurfaceLadder>(d.sols, d.grid, X, a(), flash_.options().cut * a(),
                                               flash_.options().nodes, r_floor(),
                                               std::min(opt_.ladder_step * a(), opt_.ladder_phase / flash_.particles()[i].mass()), opt_);
    E.emplace_back(std::make_pair(key, xk), d.ladder);
    if (E.size() > opt_.cache_size) E.erase(E.begin());
    return d;
  }

  static MatC expand(const LabelData& d, const MatC& m) {
    const int S = static_cast<int>(d.column.size());
    MatC out(S, S);
    for (int s = 0; s < S; ++s)
      for (int q = 0; q < S; ++q) out(s, q) = m(d.column[s], d.column[q]);
    return out;
  }

  // c^dag (prod_i F_i) c with F_I = alt[I] when I >= 0
  static double form(const State& psi, const std::vector<MatC>& F, int I, const std::vector<MatC>& alt) {
    const VecC c = psi.coefficients();
    MatC P = MatC::Ones(c.size(), c.size());
    for (size_t i = 0; i < F.size(); ++i) P = P.cwiseProduct(static_cast<int>(i) == I ? alt[i] : F[i]);
    return std::real(c.dot(P * c));
  }

  double rates_from(const State& psi, const SliceForms& s, std::vector<double>* per_label) const {
    const double den = form(psi, s.beyond, -1, s.rate);
    if (!(den > 0)) throw SimulationError(ErrorKind::NormalizationFailure, "no-flash weight vanished");
    double L = 0;
    if (per_label) per_label->assign(labels(), 0.0);
    for (int I = 0; I < labels(); ++I) {
      const double r = std::max(0.0, form(psi, s.beyond, I, s.rate)) / den;
      if (per_label) (*per_label)[I] = r;
      L += r;
    }
    return L;
  }

  // <jhat(sigma)^2> on h from the surface data, distinct-factor indexed
  MatC point_form(const LabelData& d, const Hyperboloid& h, double sig) const {
    const Grid& g = *d.grid;
    const HyperboloidNodes n = make_nodes(h, -0.5 * g.L, 0.5 * g.L, flash_.options().nodes, true);
    const double cut = flash_.options().cut * a();
    std::vector<double> t, x;
    std::vector<int> sel;
    for (int z = 0; z < n.size(); ++z)
      if (std::abs(sig - n.sigma(z)) <= cut) {
        sel.push_back(z);
        t.push_back(n.t[z]);
        x.push_back(n.x[z]);
      }
    const int K = static_cast<int>(d.sols.size());
    MatC out = MatC::Zero(K, K);
    if (sel.empty()) return out;
    MatC G(2 * sel.size(), K);
    for (int k = 0; k < K; ++k) G.col(k) = d.sols[k]->evaluate(t, x);
    for (size_t q = 0; q < sel.size(); ++q) {
      const int z = sel[q];
      const double ds = (sig - n.sigma(z)) / a();
      const double s2 = std::exp(-ds * ds) / (std::sqrt(M_PI) * a());
      MatC gz(2, K);
      const double c = std::cosh(0.5 * n.chi[z]), sh = std::sinh(0.5 * n.chi[z]);
      for (int k = 0; k < K; ++k) {
        const cplx p = G(2 * q, k), m = G(2 * q + 1, k);
        gz(0, k) = c * p - sh * m;
        gz(1, k) = c * m - sh * p;
      }
      out += (n.w[z] * s2) * (gz.adjoint() * gz);
    }
    return out;
  }

  // theta quadrature on [0, th_hi] with geometric panels toward both ends
  void theta_rule(double tp, double th_hi, std::vector<double>& th, std::vector<double>& wt) const {
    const double half = 0.5 * th_hi;
    const double first = std::min(0.05 * th_hi, opt_.end_panel * a() / tp);
    std::vector<double> edges{0.0};
    const double cap = opt_.max_panel * a() / tp;
    for (double e = first; e < half; e = std::min(2 * e, e + cap)) edges.push_back(e);
    edges.push_back(half);
    th.clear();
    wt.clear();
    std::vector<double> x, w;
    for (size_t p = 0; p + 1 < edges.size(); ++p) {
      gauss_legendre(opt_.panel_order, edges[p], edges[p + 1], x, w);
      for (int k = 0; k < opt_.panel_order; ++k) {
        th.push_back(x[k]);
        wt.push_back(w[k]);
        th.push_back(th_hi - x[k]);
        wt.push_back(w[k]);
      }
    }
  }

  void label_forms(const LabelData& d, const SpacetimePoint& X, double t, MatC& D, MatC& R) const {
    const int K = static_cast<int>(d.sols.size());
    const double tp = t - X.t;
    R = MatC::Zero(K, K);
    if (!(tp > r_floor())) {
      D = d.gram;
      return;
    }
    D = std::exp(-(tp - r_floor()) / tau()) * d.gram;
    std::vector<double> th, qw;
    theta_rule(tp, std::acos(r_floor() / tp), th, qw);
    std::lock_guard<std::mutex> lk(cache_->mu);
    MatC B, Kp, Km;
    for (size_t q = 0; q < th.size(); ++q) {
      const double r = std::max(r_floor(), tp * std::cos(th[q]));
      const double sm = r * slice_rapidity(th[q]);
      d.ladder->at(r, sm, &B, &Kp, &Km);
      const double e = weight(r);
      D += (qw[q] * tp * std::sin(th[q]) * e) * B;
      R += (qw[q] * tp * std::cos(th[q]) * e) * (Kp + Km);
    }
  }

  FlashCoord sample_slice_point(const State& psi, const std::vector<SpacetimePoint>& X, int I, double t,
                                const SliceForms& s, Rng& rng) const {
    const LabelData d = label_data(psi, I, X[I]);
    const double tp = t - X[I].t;
    const double th_hi = std::acos(r_floor() / tp);
    const int n = std::max(opt_.position_points,
                           static_cast<int>(std::ceil(th_hi * tp / (opt_.position_spacing * a())))) + 1;
    std::vector<double> th(n), pp(n), pm(n);
    const VecC c = psi.coefficients();
    MatC others = MatC::Ones(c.size(), c.size());
    for (int i = 0; i < labels(); ++i)
      if (i != I) others = others.cwiseProduct(s.beyond[i]);
    {
      std::lock_guard<std::mutex> lk(cache_->mu);
      MatC Kp, Km;
      for (int k = 0; k < n; ++k) {
        th[k] = th_hi * k / (n - 1);
        const double r = std::max(r_floor(), tp * std::cos(th[k]));
        const double sm = r * slice_rapidity(th[k]);
        d.ladder->at(r, sm, nullptr, &Kp, &Km);
        const double e = tp * std::cos(th[k]) * weight(r);
        pp[k] = std::max(0.0, e * std::real(c.dot(others.cwiseProduct(expand(d, Kp)) * c)));
        pm[k] = std::max(0.0, e * std::real(c.dot(others.cwiseProduct(expand(d, Km)) * c)));
      }
    }
    const TabulatedSampler sp(th, pp), sn(th, pm);
    const double tot = sp.total() + sn.total();
    const bool plus = rng.uniform() * tot < sp.total();
    const double theta = (plus ? sp : sn).sample(rng.uniform());
    FlashCoord f;
    f.dT = std::max(r_floor(), tp * std::cos(theta));
    f.chi = (plus ? 1 : -1) * slice_rapidity(theta);
    return f;
  }

  FlashHistory run_once(const State& psi0, const std::vector<SpacetimePoint>& X0, const RunOptions& ro,
                        std::uint64_t seed, std::uint64_t trajectory, int restart, double lambda) const {
    const int N = labels();
    check(psi0, X0);
    if (ro.check_resolution)
      for (int i = 0; i < N; ++i)
        for (const auto& term : psi0.terms) flash_.particles()[i].check_resolution(*term.factors[i]);
    FlashHistory h(N);
    h.seed = seed;
    h.trajectory = trajectory;
    h.initial = X0;
    auto rs = TrajectoryStreams::make(seed, trajectory, restart);
    State psi = psi0;
    std::vector<SpacetimePoint> X = X0;
    double t = X0[0].t;
    for (auto& x : X0) t = std::max(t, x.t);
    std::vector<int> gen(N, 0);
    while (h.count() < ro.max_flashes) {
      int I = 0;
      FlashCoord f;
      if (!next_flash(psi, X, t, ro.t_max, lambda, rs, I, f)) break;
      FlashEvent e;
      e.label = I;
      e.generation = ++gen[I];
      e.point = embed(Hyperboloid(X[I], f.dT), f.chi);
      e.wait = f.dT;
      e.chi = f.chi;
      h.flashes[I].push_back(e);
      if (h.count() >= ro.max_flashes) break;
      GenerationPlan plan;
      plan.role.assign(N, LabelRole::Marginal);
      plan.role[I] = LabelRole::Forced;
      plan.forced.assign(N, FlashCoord{});
      plan.forced[I] = f;
      GenerationOutput out = flash_.sample_generation(psi, X, rs, plan, 2);
      for (auto& dg : out.diagnostics) h.diagnostics.push_back(dg);
      psi = out.phi;
      X[I] = e.point;
      // the slice time stays at the flash; the new flash lies on it
    }
    return h;
  }

  FlashModel flash_;
  TemporalOptions opt_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace grwf
