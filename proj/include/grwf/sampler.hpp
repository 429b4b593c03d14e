#pragma once

// Gaussian jump factors, tabulated inverse-CDF sampling, and sequential
// conditional sampling of joint flash positions.
//
// A label's data on its collapse surface is g(z*C + c, s): the s-th factor
// at node z, multiplied by sqrt(weight) and the square root of the surface
// metric, so that <phi_s|phi_s'> = sum_z g_z,s^dagger g_z,s'. With
//   P_z(s, s') = g_z,s^dagger g_z,s',  A(y) = sum_z j(y, z)^2 P_z,
// the joint density of the flash coordinates is
//   rho(y_1..y_N) = Re sum_{s,s'} conj(c_s) c_s' prod_i A_i(y_i)(s, s').

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "grwf/grid.hpp"
#include "grwf/rng.hpp"

namespace grwf {

// K with K^2 int exp(-r^2/a^2) dr = 1 in one dimension
inline double jump_constant(double a) { return std::pow(M_PI * a * a, -0.25); }

inline double gaussian_jump_factor(double r, double a) { return jump_constant(a) * std::exp(-r * r / (2 * a * a)); }

// Piecewise-linear density on increasing nodes, sampled by exact inversion of
// its cumulative distribution.
class TabulatedSampler {
 public:
  TabulatedSampler(std::vector<double> y, std::vector<double> density) : y_(std::move(y)), p_(std::move(density)) {
    if (y_.size() < 2 || y_.size() != p_.size())
      throw SimulationError(ErrorKind::SamplerFailure, "tabulation needs at least two matching nodes");
    double pmax = 0;
    for (double v : p_) {
      if (!std::isfinite(v)) throw SimulationError(ErrorKind::SamplerFailure, "non-finite tabulated density");
      pmax = std::max(pmax, v);
    }
    for (double& v : p_) {
      if (v < -1e-8 * pmax) throw SimulationError(ErrorKind::SamplerFailure, "negative tabulated density");
      v = std::max(v, 0.0);
    }
    cum_.assign(y_.size(), 0.0);
    for (size_t i = 1; i < y_.size(); ++i) {
      const double h = y_[i] - y_[i - 1];
      if (!(h > 0)) throw SimulationError(ErrorKind::SamplerFailure, "tabulation nodes must increase");
      cum_[i] = cum_[i - 1] + 0.5 * h * (p_[i - 1] + p_[i]);
    }
    if (!(cum_.back() > 0)) throw SimulationError(ErrorKind::SamplerFailure, "degenerate density (zero mass)");
  }

  double total() const { return cum_.back(); }
  const std::vector<double>& nodes() const { return y_; }
  const std::vector<double>& values() const { return p_; }

  double cdf(double y) const {
    if (y <= y_.front()) return 0.0;
    if (y >= y_.back()) return 1.0;
    const size_t i = std::upper_bound(y_.begin(), y_.end(), y) - y_.begin() - 1;
    const double h = y_[i + 1] - y_[i], s = y - y_[i];
    const double m = p_[i] * s + 0.5 * (p_[i + 1] - p_[i]) * s * s / h;
    return (cum_[i] + m) / total();
  }

  // inverse CDF at u in [0, 1)
  double sample(double u) const {
    const double target = u * total();
    size_t i = std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin();
    i = std::clamp<size_t>(i, 1, y_.size() - 1) - 1;
    const double h = y_[i + 1] - y_[i];
    const double r = target - cum_[i];
    const double p0 = p_[i], dp = (p_[i + 1] - p_[i]) / h;
    // solve p0 s + dp s^2 / 2 = r, in the cancellation-free form
    const double disc = std::max(0.0, p0 * p0 + 2 * dp * r);
    double s = (p0 + std::sqrt(disc)) > 0 ? 2 * r / (p0 + std::sqrt(disc)) : 0.0;
    s = std::clamp(s, 0.0, h);
    return y_[i] + s;
  }

  double sample(Rng& rng) const { return sample(rng.uniform()); }

 private:
  std::vector<double> y_, p_, cum_;
};

// One label's data on its collapse surface.
struct LabelSurface {
  std::vector<double> sigma;  // node coordinates, increasing
  int C = 2;                  // values per node
  MatC g;                     // (C * nodes) x terms
  double period = 0;          // > 0 for a periodic coordinate
  std::vector<double> y;      // sampling grid, increasing
  double a = 1.0;
  double cut = 8.0;           // jump factors are dropped beyond cut * a

  int nodes() const { return static_cast<int>(sigma.size()); }
  int terms() const { return static_cast<int>(g.cols()); }

  double distance(double y0, double z) const {
    const double d = y0 - z;
    return period > 0 ? d - period * std::round(d / period) : d;
  }

  // visit nodes within cut * a of y0 with their signed distance
  template <class Fn>
  void for_each_near(double y0, Fn&& fn) const {
    const double w = cut * a;
    auto scan = [&](double c) {
      auto lo = std::lower_bound(sigma.begin(), sigma.end(), c - w);
      auto hi = std::upper_bound(sigma.begin(), sigma.end(), c + w);
      for (auto it = lo; it != hi; ++it) {
        const int z = static_cast<int>(it - sigma.begin());
        fn(z, c - *it);
      }
    };
    if (period > 0 && 2 * w < period) {
      // the images of y0 closest to the node range
      const double lo = sigma.front(), hi = sigma.back();
      for (int k = -1; k <= 1; ++k) {
        const double c = y0 + k * period;
        if (c + w >= lo && c - w <= hi) scan(c);
      }
    } else if (period > 0) {
      for (int z = 0; z < nodes(); ++z) fn(z, distance(y0, sigma[z]));
    } else {
      scan(y0);
    }
  }

  // jump factor of the flash coordinate y0 at every node
  VecR jump_profile(double y0) const {
    VecR j = VecR::Zero(nodes());
    for_each_near(y0, [&](int z, double d) { j[z] = gaussian_jump_factor(d, a); });
    return j;
  }
};

// P_z as columns vec(P_z) of an (S*S) x Z matrix, plus A(y) evaluation.
class LabelTables {
 public:
  explicit LabelTables(const LabelSurface& s) : s_(&s) {
    const int S = s.terms(), Z = s.nodes(), C = s.C;
    if (s.g.rows() != C * Z) throw SimulationError(ErrorKind::SamplerFailure, "surface data size mismatch");
    P_.resize(S * S, Z);
    for (int z = 0; z < Z; ++z) {
      const auto blk = s.g.middleRows(C * z, C);
      const MatC Pz = blk.adjoint() * blk;
      P_.col(z) = Eigen::Map<const VecC>(Pz.data(), S * S);
    }
  }

  int terms() const { return s_->terms(); }

  // A(y0) as an S x S matrix
  MatC at(double y0) const {
    const int S = terms();
    VecC acc = VecC::Zero(S * S);
    const double K2 = std::pow(jump_constant(s_->a), 2), a2 = s_->a * s_->a;
    s_->for_each_near(y0, [&](int z, double d) { acc += (K2 * std::exp(-d * d / a2)) * P_.col(z); });
    return Eigen::Map<const MatC>(acc.data(), S, S);
  }

  // A on the whole sampling grid, columns vec(A(y_k))
  const MatC& grid() const {
    if (grid_.cols() == 0) {
      const int Y = static_cast<int>(s_->y.size()), S = terms();
      grid_.resize(S * S, Y);
      for (int k = 0; k < Y; ++k) {
        const MatC A = at(s_->y[k]);
        grid_.col(k) = Eigen::Map<const VecC>(A.data(), S * S);
      }
    }
    return grid_;
  }

  // trapezoidal integral of A over the sampling grid
  MatC marginal() const {
    const MatC& G = grid();
    const auto& y = s_->y;
    const int S = terms();
    VecC acc = VecC::Zero(S * S);
    for (size_t k = 0; k + 1 < y.size(); ++k) acc += 0.5 * (y[k + 1] - y[k]) * (G.col(k) + G.col(k + 1));
    return Eigen::Map<const MatC>(acc.data(), S, S);
  }

  // sum_z P_z: the surface Gram matrix
  MatC gram() const {
    const int S = terms();
    const VecC acc = P_.rowwise().sum();
    return Eigen::Map<const MatC>(acc.data(), S, S);
  }

 private:
  const LabelSurface* s_;
  MatC P_;
  mutable MatC grid_;
};

enum class LabelRole { Sample, Forced, Marginal };

struct LabelPlan {
  LabelRole role = LabelRole::Sample;
  double forced = 0;  // coordinate for a forced label
};

struct JointSample {
  std::vector<double> coord;  // per label; NaN for marginalized labels
  double density = 0;         // value of the (partially marginalized) joint density at the sample
  double mass = 0;            // integral of the density over the sampled labels
};

inline double hadamard_sum(const MatC& a, const MatC& b) { return std::real(a.cwiseProduct(b).sum()); }

// Sequential conditional sampling: labels with role Sample are drawn in
// `order`, each from its conditional density given the earlier ones, with
// the later ones integrated out. W(s, s') = conj(c_s) c_s'.
inline JointSample sample_joint(const VecC& coeff, const std::vector<const LabelSurface*>& labels,
                                const std::vector<LabelPlan>& plan, const std::vector<int>& order, Rng& rng) {
  const int N = static_cast<int>(labels.size());
  const int S = static_cast<int>(coeff.size());
  std::vector<LabelTables> tab;
  tab.reserve(N);
  for (auto* l : labels) tab.emplace_back(*l);
  MatC W = coeff.conjugate() * coeff.transpose();
  JointSample out;
  out.coord.assign(N, std::numeric_limits<double>::quiet_NaN());
  std::vector<MatC> marg(N);
  for (int i = 0; i < N; ++i) {
    if (plan[i].role == LabelRole::Forced) {
      W = W.cwiseProduct(tab[i].at(plan[i].forced));
      out.coord[i] = plan[i].forced;
    } else if (plan[i].role == LabelRole::Marginal) {
      W = W.cwiseProduct(tab[i].gram());
    } else {
      marg[i] = tab[i].marginal();
    }
  }
  {
    MatC R = W;
    for (int i : order) R = R.cwiseProduct(marg[i]);
    out.mass = std::real(R.sum());
  }
  for (size_t q = 0; q < order.size(); ++q) {
    const int I = order[q];
    MatC R = W;
    for (size_t r = q + 1; r < order.size(); ++r) R = R.cwiseProduct(marg[order[r]]);
    const MatC& G = tab[I].grid();
    const Eigen::Map<const VecC> Rv(R.data(), S * S);
    // rho(y_k) = Re sum R .* A(y_k)
    const VecC dens = G.transpose() * Rv;
    std::vector<double> p(dens.size());
    for (int k = 0; k < dens.size(); ++k) p[k] = std::real(dens[k]);
    TabulatedSampler ts(labels[I]->y, std::move(p));
    const double y0 = ts.sample(rng);
    out.coord[I] = y0;
    W = W.cwiseProduct(tab[I].at(y0));
  }
  out.density = std::real(W.sum());
  if (!(out.density > 0) || !std::isfinite(out.density))
    throw SimulationError(ErrorKind::SamplerFailure, "sampled point has non-positive density");
  return out;
}

// density of one label's coordinate with all other labels integrated out, on its grid
inline std::vector<double> label_marginal_density(const VecC& coeff, const std::vector<const LabelSurface*>& labels,
                                                  int I) {
  const int N = static_cast<int>(labels.size());
  const int S = static_cast<int>(coeff.size());
  MatC W = coeff.conjugate() * coeff.transpose();
  for (int i = 0; i < N; ++i)
    if (i != I) W = W.cwiseProduct(LabelTables(*labels[i]).gram());
  LabelTables t(*labels[I]);
  const VecC dens = t.grid().transpose() * Eigen::Map<const VecC>(W.data(), S * S);
  std::vector<double> p(dens.size());
  for (int k = 0; k < dens.size(); ++k) p[k] = std::real(dens[k]);
  return p;
}

// uniform grid with spacing at most h covering [lo, hi]
inline std::vector<double> uniform_grid(double lo, double hi, double h) {
  const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / h)) + 1);
  std::vector<double> y(n);
  for (int k = 0; k < n; ++k) y[k] = lo + (hi - lo) * k / (n - 1);
  return y;
}

}  // namespace grwf
