#pragma once

// N-particle multi-time wavefunctions in low-rank product form
//   Psi = sum_s c_s  phi_{s,1} (x) ... (x) phi_{s,N},
// where particle i's factors all live on the plane t = t_i.
// Factors are shared pointers so that unchanged factors are not copied
// and per-field caches (propagator solutions) can key on them.

#include <map>
#include <memory>
#include <vector>

#include "grwf/grid.hpp"

namespace grwf {

template <class Field>
struct ProductTerm {
  cplx coeff = 1.0;
  std::vector<std::shared_ptr<const Field>> factors;
};

template <class Field>
class MultiTimeState {
 public:
  using FieldPtr = std::shared_ptr<const Field>;
  std::vector<ProductTerm<Field>> terms;

  static MultiTimeState product(const std::vector<Field>& fs) {
    MultiTimeState s;
    ProductTerm<Field> t;
    for (const auto& f : fs) t.factors.push_back(std::make_shared<const Field>(f));
    s.terms.push_back(std::move(t));
    s.validate();
    return s;
  }

  static MultiTimeState superposition(const std::vector<std::pair<cplx, std::vector<Field>>>& parts) {
    MultiTimeState s;
    for (const auto& [c, fs] : parts) {
      ProductTerm<Field> t;
      t.coeff = c;
      for (const auto& f : fs) t.factors.push_back(std::make_shared<const Field>(f));
      s.terms.push_back(std::move(t));
    }
    s.validate();
    return s;
  }

  int particles() const { return terms.empty() ? 0 : static_cast<int>(terms[0].factors.size()); }
  int rank() const { return static_cast<int>(terms.size()); }
  double time(int i) const { return terms.at(0).factors.at(i)->t; }
  std::vector<double> times() const {
    std::vector<double> t;
    for (int i = 0; i < particles(); ++i) t.push_back(time(i));
    return t;
  }

  void validate() const {
    if (terms.empty()) throw SimulationError(ErrorKind::ZeroNorm, "state has no terms");
    const int N = particles();
    for (const auto& t : terms) {
      if (static_cast<int>(t.factors.size()) != N)
        throw SimulationError(ErrorKind::ConfigError, "terms have different particle counts");
      for (int i = 0; i < N; ++i) {
        const auto& f = *t.factors[i];
        const auto& f0 = *terms[0].factors[i];
        if (!(*f.grid == *f0.grid) || f.t != f0.t)
          throw SimulationError(ErrorKind::SurfaceMismatch, "factors of one particle live on different planes");
      }
    }
  }

  // G(s, s') = <phi_{s,i} | phi_{s',i}>
  MatC gram(int i) const {
    const int S = rank();
    MatC G(S, S);
    for (int a = 0; a < S; ++a)
      for (int b = a; b < S; ++b) {
        const cplx v = terms[a].factors[i] == terms[b].factors[i]
                           ? cplx(plane_norm2(*terms[a].factors[i]), 0.0)
                           : plane_inner_product(*terms[a].factors[i], *terms[b].factors[i]);
        G(a, b) = v;
        G(b, a) = std::conj(v);
      }
    return G;
  }

  // elementwise product of all particles' Gram matrices, optionally skipping one
  MatC gram_product(int skip = -1) const {
    const int S = rank();
    MatC P = MatC::Ones(S, S);
    for (int i = 0; i < particles(); ++i)
      if (i != skip) P = P.cwiseProduct(gram(i));
    return P;
  }

  VecC coefficients() const {
    VecC c(rank());
    for (int s = 0; s < rank(); ++s) c[s] = terms[s].coeff;
    return c;
  }

  double norm2() const {
    const VecC c = coefficients();
    return std::real(c.dot(gram_product() * c));
  }

  void normalize() {
    const double n = std::sqrt(norm2());
    if (!(n > 0) || !std::isfinite(n)) throw SimulationError(ErrorKind::ZeroNorm, "cannot normalize a zero state");
    for (auto& t : terms) t.coeff /= n;
  }

  // Move factor norms into the coefficients (each distinct factor is scaled once)
  // and drop terms whose weight is below rel_tol of the largest.
  void rebalance(double rel_tol = 1e-32) {
    const int N = particles();
    for (int i = 0; i < N; ++i) {
      std::map<const Field*, std::pair<std::shared_ptr<const Field>, double>> done;
      for (auto& t : terms) {
        auto& f = t.factors[i];
        auto it = done.find(f.get());
        if (it == done.end()) {
          const double n = std::sqrt(plane_norm2(*f));
          auto g = n > 0 ? std::make_shared<const Field>(f->grid, f->t, f->values / n) : f;
          it = done.emplace(f.get(), std::make_pair(g, n)).first;
        }
        t.coeff *= it->second.second;
        f = it->second.first;
      }
    }
    double wmax = 0;
    for (auto& t : terms) wmax = std::max(wmax, std::norm(t.coeff));
    std::vector<ProductTerm<Field>> kept;
    for (auto& t : terms)
      if (std::norm(t.coeff) > rel_tol * wmax) kept.push_back(std::move(t));
    terms = std::move(kept);
  }

  // reduced density matrix of particle i in its spectral (orthonormal) basis
  MatC reduced_density(int i) const {
    const int S = rank();
    const MatC P = gram_product(i);
    const Grid& g = *time_grid(i);
    const int D = static_cast<int>(terms[0].factors[i]->values.size());
    MatC V(D, S);
    for (int s = 0; s < S; ++s) V.col(s) = to_spectrum(g, terms[s].factors[i]->values);
    // rho = sum_{s,s'} c_s conj(c_s') <phi_{s',j}|phi_{s,j}> |v_s><v_s'|
    MatC K(S, S);
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b) K(a, b) = terms[a].coeff * std::conj(terms[b].coeff) * P(b, a);
    return V * K * V.adjoint();
  }

  GridPtr time_grid(int i) const { return terms.at(0).factors.at(i)->grid; }
};

// Apply each particle's propagator to its own factors. Identical factor
// pointers are propagated once.
template <class Particle, class Field>
MultiTimeState<Field> multi_time_evolve(const MultiTimeState<Field>& psi, const std::vector<Particle>& particles,
                                        const std::vector<double>& times) {
  const int N = psi.particles();
  if (static_cast<int>(particles.size()) != N || static_cast<int>(times.size()) != N)
    throw SimulationError(ErrorKind::ConfigError, "particle / time count does not match the state");
  MultiTimeState<Field> out = psi;
  for (int i = 0; i < N; ++i) {
    std::map<const Field*, std::shared_ptr<const Field>> done;
    for (auto& t : out.terms) {
      auto& f = t.factors[i];
      if (f->t == times[i]) continue;
      auto it = done.find(f.get());
      if (it == done.end())
        it = done.emplace(f.get(), std::make_shared<const Field>(particles[i].propagate(*f, times[i]))).first;
      f = it->second;
    }
  }
  return out;
}

// Full amplitude of a two-particle state: A(a, b) with a = c1*M1 + j1, b = c2*M2 + j2.
template <class Field>
MatC dense_amplitude(const MultiTimeState<Field>& psi) {
  if (psi.particles() != 2) throw SimulationError(ErrorKind::ConfigError, "dense amplitude needs two particles");
  const auto& f0 = *psi.terms[0].factors[0];
  const auto& g0 = *psi.terms[0].factors[1];
  MatC A = MatC::Zero(f0.values.size(), g0.values.size());
  for (const auto& t : psi.terms) A += t.coeff * t.factors[0]->values * t.factors[1]->values.transpose();
  return A;
}

}  // namespace grwf
