#pragma once

// Nonrelativistic GRW model: continuous-time jump process and the
// equivalent generation-based construction. Flash positions live on the
// periodic box; collapse multiplies a factor by j(y - x) on its own plane.

#include <limits>
#include <map>
#include <vector>

#include "grwf/events.hpp"
#include "grwf/multitime.hpp"
#include "grwf/sampler.hpp"

namespace grwf {

enum class GrwMode { Jump, Generation };

struct GrwOptions {
  double y_spacing = 0.125;  // in units of a; the sampling grid is at least as fine as the box grid
  double norm_tol = 1e-9;
};

template <class Particle>
class GrwModel {
 public:
  using Field = typename Particle::Field;
  using State = MultiTimeState<Field>;
  static constexpr int C = Field::components;

  GrwModel(std::vector<Particle> particles, double tau, double a, GrwOptions opt = {})
      : parts_(std::move(particles)), tau_(tau), a_(a), opt_(opt) {
    if (!(tau > 0)) throw SimulationError(ErrorKind::ConfigError, "tau must be positive");
    if (!(a > 0)) throw SimulationError(ErrorKind::ConfigError, "a must be positive");
  }

  int labels() const { return static_cast<int>(parts_.size()); }
  double tau() const { return tau_; }
  double a() const { return a_; }
  const std::vector<Particle>& particles() const { return parts_; }

  // label i's factors on their common plane
  LabelSurface surface(const State& psi, int i) const {
    const Grid& g = *psi.time_grid(i);
    LabelSurface s;
    s.C = C;
    s.a = a_;
    s.period = g.L;
    s.sigma.resize(g.M);
    for (int j = 0; j < g.M; ++j) s.sigma[j] = g.x(j);
    s.g.resize(C * g.M, psi.rank());
    const double w = std::sqrt(g.dx());
    for (int t = 0; t < psi.rank(); ++t) {
      const auto& f = *psi.terms[t].factors[i];
      for (int j = 0; j < g.M; ++j)
        for (int c = 0; c < C; ++c) s.g(C * j + c, t) = w * f.at(c, j);
    }
    s.y = uniform_grid(g.x(0), g.x(0) + g.L, std::min(g.dx(), opt_.y_spacing * a_));
    return s;
  }

  // density of a type-i collapse centre at the grid points of surface(psi, i).y
  std::vector<double> collapse_rate_density(const State& psi, int i) const {
    std::vector<LabelSurface> s;
    for (int k = 0; k < psi.particles(); ++k) s.push_back(surface(psi, k));
    std::vector<const LabelSurface*> ptr;
    for (auto& v : s) ptr.push_back(&v);
    return label_marginal_density(psi.coefficients(), ptr, i);
  }

  // multiply label i's factors by j(y - x) and renormalize by sqrt(density)
  void collapse(State& psi, int i, double y, double density) const {
    collapse_unnormalized(psi, i, y);
    for (auto& t : psi.terms) t.coeff /= std::sqrt(density);
    check_norm(psi);
  }

  // one flash of the jump process; t is the common time of all factors
  FlashEvent jump_step(State& psi, double& t, std::vector<int>& generation, TrajectoryStreams& rs) const {
    t += rs.waiting.exponential(tau_ / labels());
    return jump_flash(psi, t, generation, rs);
  }

  // the collapse part of a jump step at the already drawn time t
  FlashEvent jump_flash(State& psi, double t, std::vector<int>& generation, TrajectoryStreams& rs) const {
    const int N = labels();
    const int I = static_cast<int>(rs.label.below(N));
    psi = multi_time_evolve(psi, parts_, std::vector<double>(N, t));
    std::vector<LabelSurface> s;
    for (int k = 0; k < N; ++k) s.push_back(surface(psi, k));
    std::vector<const LabelSurface*> ptr;
    std::vector<LabelPlan> plan(N, LabelPlan{LabelRole::Marginal, 0});
    for (auto& v : s) ptr.push_back(&v);
    plan[I].role = LabelRole::Sample;
    const JointSample js = sample_joint(psi.coefficients(), ptr, plan, {I}, rs.position);
    collapse(psi, I, js.coord[I], js.density);
    FlashEvent e;
    e.label = I;
    e.generation = ++generation[I];
    e.point = point(t, js.coord[I]);
    return e;
  }

  // one generation: every label draws its own waiting time, positions are joint
  std::vector<FlashEvent> generation_step(State& psi, std::vector<double>& T, int gen, TrajectoryStreams& rs,
                                          double* mass = nullptr) const {
    const int N = labels();
    std::vector<double> dT(N);
    for (int i = 0; i < N; ++i) {
      dT[i] = rs.waiting.exponential(tau_);
      T[i] += dT[i];
    }
    psi = multi_time_evolve(psi, parts_, T);
    std::vector<LabelSurface> s;
    for (int k = 0; k < N; ++k) s.push_back(surface(psi, k));
    std::vector<const LabelSurface*> ptr;
    for (auto& v : s) ptr.push_back(&v);
    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    const JointSample js = sample_joint(psi.coefficients(), ptr, std::vector<LabelPlan>(N), order, rs.position);
    if (mass) *mass = js.mass;
    // Phi = prod_i j_i(Y_i) psi / sqrt(rho): one division carries the whole normalization
    for (int i = 0; i < N; ++i) collapse_unnormalized(psi, i, js.coord[i]);
    for (auto& t : psi.terms) t.coeff /= std::sqrt(js.density);
    check_norm(psi);
    std::vector<FlashEvent> out;
    for (int i = 0; i < N; ++i) out.push_back(FlashEvent{i, gen, point(T[i], js.coord[i]), dT[i]});
    return out;
  }

  struct RunOptions {
    GrwMode mode = GrwMode::Jump;
    double horizon = std::numeric_limits<double>::infinity();  // jump mode
    int generations = 1;                                       // generation mode
    int stop_label = -1;  // jump mode: stop after this label's first flash
    size_t max_flashes = 1000000;
  };

  FlashHistory run(const State& psi0, double t0, const RunOptions& ro, std::uint64_t seed,
                   std::uint64_t trajectory) const {
    const int N = labels();
    FlashHistory h(N);
    h.seed = seed;
    h.trajectory = trajectory;
    auto rs = TrajectoryStreams::make(seed, trajectory);
    State psi = multi_time_evolve(psi0, parts_, std::vector<double>(N, t0));
    if (ro.mode == GrwMode::Jump) {
      h.initial.assign(N, point(t0, std::numeric_limits<double>::quiet_NaN()));
      double t = t0;
      std::vector<int> gen(N, 0);
      std::vector<double> last(N, t0);
      while (h.count() < ro.max_flashes) {
        const double w = rs.waiting.exponential(tau_ / N);
        if (!(t + w <= ro.horizon)) break;
        t += w;
        FlashEvent e = jump_flash(psi, t, gen, rs);
        e.wait = t - last[e.label];
        last[e.label] = t;
        h.flashes[e.label].push_back(e);
        if (e.label == ro.stop_label) break;
      }
    } else {
      std::vector<double> T(N, t0);
      h.initial.assign(N, point(t0, std::numeric_limits<double>::quiet_NaN()));
      for (int k = 1; k <= ro.generations; ++k)
        for (auto& e : generation_step(psi, T, k, rs)) h.flashes[e.label].push_back(e);
    }
    return h;
  }

 private:
  void check_norm(State& psi) const {
    psi.rebalance();
    const double nn = psi.norm2();
    if (std::abs(nn - 1) > opt_.norm_tol)
      throw SimulationError(ErrorKind::NormalizationFailure, "post-collapse norm " + std::to_string(nn));
  }

  void collapse_unnormalized(State& psi, int i, double y) const {
    std::map<const Field*, std::shared_ptr<const Field>> done;
    for (auto& t : psi.terms) {
      auto& f = t.factors[i];
      auto it = done.find(f.get());
      if (it == done.end()) {
        Field out = *f;
        const Grid& g = *f->grid;
        for (int j = 0; j < g.M; ++j) {
          const double jf = gaussian_jump_factor(g.wrap(y - g.x(j)), a_);
          for (int c = 0; c < C; ++c) out.at(c, j) *= jf;
        }
        it = done.emplace(f.get(), std::make_shared<const Field>(std::move(out))).first;
      }
      f = it->second;
    }
  }

  std::vector<Particle> parts_;
  double tau_, a_;
  GrwOptions opt_;
};

}  // namespace grwf
