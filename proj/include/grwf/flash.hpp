#pragma once

// Relativistic flash process for Dirac particles. One generation: every
// label draws a proper waiting time dT_i ~ Exp(tau); the new flashes Y_i are
// drawn jointly on the hyperboloids H_i = {tdist(X_i, y) = dT_i} from
//   rho(Y) = | prod_i j_{H_i}(Y_i, .) Psi |^2   (surface norms on prod_i H_i)
// and the state is collapsed by the same jump factors and re-expressed on
// lab planes.
//
// Coordinates on H_i are the arc length sigma = r chi. (dT, sigma) has unit
// Jacobian to d^2x, so densities in these coordinates are space-time densities.

#include <algorithm>
#include <limits>
#include <map>
#include <vector>

#include "grwf/dirac.hpp"
#include "grwf/events.hpp"
#include "grwf/multitime.hpp"
#include "grwf/sampler.hpp"

namespace grwf {

// j_H(y, z) = K exp(-dist_H(y, z)^2 / 2a^2); in d = 1 the arc-length metric is
// flat, so K = (pi a^2)^(-1/4) independently of r and z
inline double hyperboloid_jump_factor(const Hyperboloid& h, Rapidity y, Rapidity z, double a) {
  return gaussian_jump_factor(surface_distance(h, y, z), a);
}

struct FlashOptions {
  NodeOptions nodes;
  double y_spacing = 0.125;  // sampling grid spacing in units of a
  double cut = 8.0;          // jump factors vanish beyond cut * a
  double chi_cap = 700.0;    // flash rapidities stay below this (cosh stays finite)
  double mass_tol = 1e-3;    // allowed deviation of the density mass from 1
  double norm_tol = 1e-6;
  double extension_tol = 1e-3;  // allowed norm change of the lab re-expression
  double trim = 1e-20;       // surface nodes below this fraction of the peak density are dropped
  double t_max = std::numeric_limits<double>::infinity();  // simulation window
  bool positive_energy = false;
};

// one label's active factors restricted to a hyperboloid
struct HyperboloidLabel {
  Hyperboloid h;
  NodesPtr nodes;
  std::vector<std::shared_ptr<const DiracSolution>> solutions;  // per distinct factor
  std::vector<SurfaceSpinor> fields;                            // per distinct factor
  std::vector<int> column;                                      // term -> distinct factor
  LabelSurface surface;
  double norm_deficit = 0;
  double truncation = 0;
  bool box_warning = false;
};

// per-label request for one generation
struct GenerationPlan {
  std::vector<LabelRole> role;         // default: all Sample
  std::vector<FlashCoord> forced;      // flashes of Forced labels, relative to X
  std::vector<int> order;              // sampling order of Sample labels; default increasing
  bool collapse = true;
};

struct GenerationOutput {
  std::vector<FlashEvent> flashes;  // Sample and Forced labels, increasing label
  MultiTimeState<SpinorField> phi;
  std::vector<CollapseDiagnostics> diagnostics;
  double mass = 1;     // quadrature of the sampled density
  double density = 0;  // position density at the sample
};

class FlashModel {
 public:
  using State = MultiTimeState<SpinorField>;

  FlashModel(std::vector<DiracParticle> particles, double tau, double a, FlashOptions opt = {})
      : parts_(std::move(particles)), tau_(tau), a_(a), opt_(opt) {
    if (!(tau > 0)) throw SimulationError(ErrorKind::ConfigError, "tau must be positive");
    if (!(a > 0)) throw SimulationError(ErrorKind::ConfigError, "a must be positive");
    if (!(opt_.chi_cap > opt_.nodes.chi_max))
      throw SimulationError(ErrorKind::ConfigError, "chi_cap must exceed the node rapidity range");
  }

  int labels() const { return static_cast<int>(parts_.size()); }
  double tau() const { return tau_; }
  double a() const { return a_; }
  const FlashOptions& options() const { return opt_; }
  const std::vector<DiracParticle>& particles() const { return parts_; }

  // smallest hyperboloid radius for which the sampling grid fits below chi_cap;
  // shorter waiting times are redrawn (probability about r_floor / tau)
  double r_floor() const { return opt_.cut * a_ / (opt_.chi_cap - opt_.nodes.chi_max); }

  HyperboloidLabel restrict_label(const State& psi, int i, const Hyperboloid& h) const {
    if (h.center.t + std::hypot(h.radius, psi.time_grid(i)->L) > opt_.t_max)
      throw SimulationError(ErrorKind::WindowExceeded, "hyperboloid reaches beyond t_max");
    HyperboloidLabel out;
    out.h = h;
    std::map<const SpinorField*, int> ids;
    std::vector<const SpinorField*> distinct;
    for (const auto& t : psi.terms) {
      auto [it, fresh] = ids.emplace(t.factors[i].get(), static_cast<int>(distinct.size()));
      if (fresh) {
        distinct.push_back(t.factors[i].get());
        out.solutions.push_back(parts_[i].solution(t.factors[i], false));
      }
      out.column.push_back(it->second);
    }
    std::vector<const DiracSolution*> raw;
    for (auto& s : out.solutions) raw.push_back(s.get());
    const Grid& g = *psi.time_grid(i);
    auto all = std::make_shared<const HyperboloidNodes>(support_nodes(h, g, raw, opt_.nodes, &out.box_warning));
    if (all->size() == 0) throw SimulationError(ErrorKind::WindowExceeded, "no surface nodes in the support region");
    std::vector<SurfaceSpinor> full;
    std::vector<double> n2;
    for (size_t d = 0; d < distinct.size(); ++d) {
      n2.push_back(plane_norm2(*distinct[d]));
      full.push_back(restrict_to_hyperboloid(*out.solutions[d], all, n2.back()).field);
    }
    // drop low-density ends
    const int Z = all->size();
    std::vector<double> dens(Z, 0.0);
    for (size_t d = 0; d < full.size(); ++d)
      for (int z = 0; z < Z; ++z) dens[z] += all->w[z] * full[d].density(z) / n2[d];
    const double peak = *std::max_element(dens.begin(), dens.end());
    int lo = 0, hi = Z - 1;
    while (lo < hi && dens[lo] < opt_.trim * peak) ++lo;
    while (hi > lo && dens[hi] < opt_.trim * peak) --hi;
    double tot = 0, kept = 0;
    for (int z = 0; z < Z; ++z) {
      tot += dens[z];
      if (z >= lo && z <= hi) kept += dens[z];
    }
    out.truncation = tot > 0 ? (tot - kept) / tot : 0.0;
    out.nodes = slice(*all, lo, hi);
    for (size_t d = 0; d < full.size(); ++d) {
      SurfaceSpinor f;
      f.nodes = out.nodes;
      f.values = full[d].values.segment(2 * lo, 2 * (hi - lo + 1));
      out.norm_deficit = std::max(out.norm_deficit, std::abs(1 - surface_norm2(full[d]) / n2[d]));
      out.fields.push_back(std::move(f));
    }
    // sampler data sqrt(w) G^{1/2} f per node
    const HyperboloidNodes& n = *out.nodes;
    LabelSurface& s = out.surface;
    s.C = 2;
    s.a = a_;
    s.cut = opt_.cut;
    s.sigma.resize(n.size());
    for (int z = 0; z < n.size(); ++z) s.sigma[z] = n.sigma(z);
    s.g.resize(2 * n.size(), psi.rank());
    for (int t = 0; t < psi.rank(); ++t) {
      const SurfaceSpinor& f = out.fields[out.column[t]];
      for (int z = 0; z < n.size(); ++z) {
        cplx v[2];
        apply_metric_sqrt(n.chi[z], f.at(z), v);
        const double sw = std::sqrt(n.w[z]);
        s.g(2 * z, t) = sw * v[0];
        s.g(2 * z + 1, t) = sw * v[1];
      }
    }
    const double r = h.radius, reach = opt_.cut * a_;
    s.y = uniform_grid(std::max(s.sigma.front() - reach, -opt_.chi_cap * r),
                       std::min(s.sigma.back() + reach, opt_.chi_cap * r), opt_.y_spacing * a_);
    return out;
  }

  // a label that is integrated out: only its Gram matrix matters, taken on its lab plane
  LabelSurface plane_label(const State& psi, int i) const {
    const Grid& g = *psi.time_grid(i);
    LabelSurface s;
    s.C = 2;
    s.a = a_;
    s.period = g.L;
    s.sigma.resize(g.M);
    for (int j = 0; j < g.M; ++j) s.sigma[j] = g.x(j);
    s.g.resize(2 * g.M, psi.rank());
    const double w = std::sqrt(g.dx());
    for (int t = 0; t < psi.rank(); ++t)
      for (int j = 0; j < g.M; ++j)
        for (int c = 0; c < 2; ++c) s.g(2 * j + c, t) = w * psi.terms[t].factors[i]->at(c, j);
    s.y = {g.x(0), g.x(0) + g.L};
    return s;
  }

  GenerationOutput sample_generation(const State& psi, const std::vector<SpacetimePoint>& X, TrajectoryStreams& rs,
                                     GenerationPlan plan = {}, int generation = 1) const {
    const int N = labels();
    if (psi.particles() != N || static_cast<int>(X.size()) != N)
      throw SimulationError(ErrorKind::ConfigError, "state, particles and flashes disagree in number");
    for (auto& x : X)
      if (!x.finite()) throw SimulationError(ErrorKind::ConfigError, "previous flash is not finite");
    // supplied states must be resolved; collapsed ones are checked through their extension
    if (generation == 1)
      for (int i = 0; i < N; ++i)
        for (const auto& t : psi.terms) parts_[i].check_resolution(*t.factors[i]);
    if (plan.role.empty()) plan.role.assign(N, LabelRole::Sample);
    if (plan.order.empty())
      for (int i = 0; i < N; ++i)
        if (plan.role[i] == LabelRole::Sample) plan.order.push_back(i);

    std::vector<double> dT(N, 0.0);
    for (int i = 0; i < N; ++i) {
      if (plan.role[i] == LabelRole::Sample) {
        do dT[i] = rs.waiting.exponential(tau_);
        while (dT[i] < r_floor());
      } else if (plan.role[i] == LabelRole::Forced) {
        dT[i] = plan.forced.at(i).dT;
        if (!(dT[i] > 0)) throw SimulationError(ErrorKind::SpacelikeSeparated, "forced flash on the light cone");
      }
    }
    std::vector<HyperboloidLabel> hl(N);
    std::vector<LabelSurface> planes(N);
    std::vector<const LabelSurface*> ptr(N);
    std::vector<LabelPlan> lp(N);
    for (int i = 0; i < N; ++i) {
      if (plan.role[i] == LabelRole::Marginal) {
        planes[i] = plane_label(psi, i);
        ptr[i] = &planes[i];
        lp[i].role = LabelRole::Marginal;
        continue;
      }
      hl[i] = restrict_label(psi, i, Hyperboloid(X[i], dT[i]));
      ptr[i] = &hl[i].surface;
      lp[i].role = plan.role[i];
      if (plan.role[i] == LabelRole::Forced) lp[i].forced = dT[i] * plan.forced[i].chi;
    }
    const JointSample js = sample_joint(psi.coefficients(), ptr, lp, plan.order, rs.position);
    const bool any_forced = std::count(plan.role.begin(), plan.role.end(), LabelRole::Forced) > 0;
    if (!any_forced && std::abs(js.mass - 1) > opt_.mass_tol)
      throw SimulationError(ErrorKind::NormalizationFailure,
                            "generation density integrates to " + std::to_string(js.mass));

    GenerationOutput out;
    out.mass = js.mass;
    out.density = js.density;
    double t_ref = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
      if (plan.role[i] == LabelRole::Marginal) continue;
      FlashEvent e;
      e.label = i;
      e.generation = generation;
      e.chi = js.coord[i] / dT[i];
      e.point = embed(hl[i].h, e.chi);
      if (!e.point.finite()) throw SimulationError(ErrorKind::WindowExceeded, "flash point is not finite");
      e.wait = dT[i];
      t_ref = std::max(t_ref, e.point.t);
      out.flashes.push_back(e);
      CollapseDiagnostics d;
      d.label = i;
      d.generation = generation;
      d.density_mass = js.mass;
      d.norm_deficit = hl[i].norm_deficit;
      d.truncation = hl[i].truncation;
      d.box_warning = hl[i].box_warning;
      out.diagnostics.push_back(d);
    }
    if (!plan.collapse) {
      out.phi = psi;
      return out;
    }
    // collapsed surface data per label, then the surface norm of Phi
    std::vector<std::vector<SurfaceSpinor>> jf(N);
    for (int i = 0; i < N; ++i) {
      if (plan.role[i] == LabelRole::Marginal) continue;
      const VecR j = hl[i].surface.jump_profile(js.coord[i]);
      for (const auto& f : hl[i].fields) {
        SurfaceSpinor c = f;
        for (int z = 0; z < c.size(); ++z) {
          c.at(z)[0] *= j[z];
          c.at(z)[1] *= j[z];
        }
        jf[i].push_back(std::move(c));
      }
    }
    {
      const int S = psi.rank();
      MatC P = MatC::Ones(S, S);
      for (int i = 0; i < N; ++i) {
        MatC G(S, S);
        if (plan.role[i] == LabelRole::Marginal) {
          G = psi.gram(i);
        } else {
          for (int s = 0; s < S; ++s)
            for (int q = 0; q < S; ++q)
              G(s, q) = surface_inner_product(jf[i][hl[i].column[s]], jf[i][hl[i].column[q]]);
        }
        P = P.cwiseProduct(G);
      }
      const VecC c = psi.coefficients();
      const double nh = std::real(c.dot(P * c)) / js.density;
      for (auto& d : out.diagnostics) d.surface_norm_error = std::abs(nh - 1);
      if (std::abs(nh - 1) > opt_.norm_tol)
        throw SimulationError(ErrorKind::NormalizationFailure, "collapsed surface norm " + std::to_string(nh));
    }

    // lab-plane re-expression at the latest new flash time
    State phi = psi;
    for (int i = 0; i < N; ++i) {
      if (plan.role[i] == LabelRole::Marginal) continue;
      std::vector<std::shared_ptr<const SpinorField>> lab;
      for (size_t d = 0; d < jf[i].size(); ++d) {
        SpinorField f = extend_from_hyperboloid(*hl[i].solutions[d], jf[i][d], t_ref);
        if (f.t != t_ref) f = parts_[i].propagate(f, t_ref, false);
        lab.push_back(std::make_shared<const SpinorField>(std::move(f)));
      }
      for (int s = 0; s < phi.rank(); ++s) phi.terms[s].factors[i] = lab[hl[i].column[s]];
    }
    for (auto& t : phi.terms) t.coeff /= std::sqrt(js.density);
    const double nl = phi.norm2();
    for (auto& d : out.diagnostics) d.extension_correction = std::abs(nl - 1);
    // collapses generically create negative-energy parts with large lab momenta;
    // the grid must hold the collapsed state up to the tolerance
    if (std::abs(nl - 1) > opt_.extension_tol)
      throw SimulationError(ErrorKind::GridTooCoarse,
                            "collapsed state changes norm by " + std::to_string(nl - 1) + " on the lab grid");
    phi.normalize();
    if (opt_.positive_energy) {
      for (auto& d : out.diagnostics) {
        const int i = d.label;
        std::map<const SpinorField*, std::shared_ptr<const SpinorField>> done;
        for (auto& t : phi.terms) {
          auto& f = t.factors[i];
          auto it = done.find(f.get());
          if (it == done.end())
            it = done.emplace(f.get(), std::make_shared<const SpinorField>(positive_energy_project(*f, parts_[i].mass())))
                     .first;
          f = it->second;
        }
        const double kept = phi.norm2();
        d.pair_probability = std::clamp(1 - kept, 0.0, 1.0);
        phi.normalize();
      }
    }
    phi.rebalance();
    out.phi = std::move(phi);
    return out;
  }

  struct RunOptions {
    int generations = 1;
    bool collapse_last = true;  // the final generation's collapse is only needed to continue
  };

  FlashHistory run(const State& psi0, const std::vector<SpacetimePoint>& X0, const RunOptions& ro, std::uint64_t seed,
                   std::uint64_t trajectory) const {
    const int N = labels();
    FlashHistory h(N);
    h.seed = seed;
    h.trajectory = trajectory;
    h.initial = X0;
    auto rs = TrajectoryStreams::make(seed, trajectory);
    State psi = psi0;
    std::vector<SpacetimePoint> X = X0;
    for (int k = 1; k <= ro.generations; ++k) {
      GenerationPlan plan;
      plan.collapse = ro.collapse_last || k < ro.generations;
      GenerationOutput g = sample_generation(psi, X, rs, plan, k);
      for (auto& e : g.flashes) {
        h.flashes[e.label].push_back(e);
        X[e.label] = e.point;
      }
      h.diagnostics.insert(h.diagnostics.end(), g.diagnostics.begin(), g.diagnostics.end());
      psi = std::move(g.phi);
    }
    return h;
  }

  // Density of a generation in the coordinates (dT_i, sigma_i = dT_i chi_i) per
  // label, which equals the space-time density; a NaN dT marks a label that is
  // integrated out. Includes the waiting-time factors.
  double generation_density(const State& psi, const std::vector<SpacetimePoint>& X,
                            const std::vector<FlashCoord>& Y) const {
    const int N = labels();
    MatC W = psi.coefficients().conjugate() * psi.coefficients().transpose();
    double w = 1;
    for (int i = 0; i < N; ++i) {
      if (std::isnan(Y[i].dT)) {
        W = W.cwiseProduct(psi.gram(i));
        continue;
      }
      const double r = Y[i].dT;
      w *= std::exp(-r / tau_) / tau_;
      const HyperboloidLabel hl = restrict_label(psi, i, Hyperboloid(X[i], r));
      W = W.cwiseProduct(LabelTables(hl.surface).at(r * Y[i].chi));
    }
    return w * std::real(W.sum());
  }

 private:
  static NodesPtr slice(const HyperboloidNodes& n, int lo, int hi) {
    auto out = std::make_shared<HyperboloidNodes>();
    out->h = n.h;
    auto cut = [&](const std::vector<double>& v) { return std::vector<double>(v.begin() + lo, v.begin() + hi + 1); };
    out->u = cut(n.u);
    out->chi = cut(n.chi);
    out->t = cut(n.t);
    out->x = cut(n.x);
    out->w = cut(n.w);
    return out;
  }

  std::vector<DiracParticle> parts_;
  double tau_, a_;
  FlashOptions opt_;
};

// Positive-energy collapse: Phi = P+(j psi) / |P+(j psi)|, with the pair
// creation estimate |(1 - P+) j psi|^2 / |j psi|^2.
inline std::pair<SpinorField, double> modified_collapse(const SpinorField& jpsi, double mass) {
  const double n0 = plane_norm2(jpsi);
  if (!(n0 > 0)) throw SimulationError(ErrorKind::ZeroNorm, "jump-multiplied state vanishes");
  SpinorField p = positive_energy_project(jpsi, mass);
  const double n1 = plane_norm2(p);
  if (!(n1 > 1e-300 * n0)) throw SimulationError(ErrorKind::ZeroNorm, "positive-energy part vanishes");
  p.values /= std::sqrt(n1);
  return {std::move(p), std::clamp(1 - n1 / n0, 0.0, 1.0)};
}

}  // namespace grwf
