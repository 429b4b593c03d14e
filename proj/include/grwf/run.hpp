#pragma once

// Builds models and initial states from a RunConfig and runs trajectories.

#include <complex>
#include <string>
#include <vector>

#include "grwf/analysis.hpp"
#include "grwf/flash.hpp"
#include "grwf/grw.hpp"
#include "grwf/io.hpp"
#include "grwf/parallel.hpp"
#include "grwf/schrodinger.hpp"
#include "grwf/temporal.hpp"

namespace grwf {

template <class Field, class Make>
MultiTimeState<Field> build_state(const io::RunConfig& c, Make&& make_factor) {
  std::vector<std::pair<cplx, std::vector<Field>>> parts;
  for (const auto& t : c.terms) {
    std::vector<Field> f;
    for (size_t i = 0; i < t.packets.size(); ++i) f.push_back(make_factor(static_cast<int>(i), t.packets[i]));
    parts.emplace_back(std::polar(t.amplitude, t.phase), std::move(f));
  }
  auto psi = MultiTimeState<Field>::superposition(parts);
  psi.normalize();
  return psi;
}

inline void validate_for_run(const io::RunConfig& c) {
  if (c.model == "temporal" && !std::isfinite(c.t_max))
    throw SimulationError(ErrorKind::ConfigError, "key 'params.t_max': the temporal model needs a finite window");
  if (c.model == "grw-jump" && !std::isfinite(c.horizon) && c.max_flashes > 100000)
    throw SimulationError(ErrorKind::ConfigError, "key 'params.horizon': grw-jump needs a horizon or a flash cap");
}

// Trajectory k uses streams derived from (seed, k); results do not depend on workers.
inline std::vector<FlashHistory> simulate(const io::RunConfig& c, std::uint64_t seed, int workers) {
  validate_for_run(c);
  auto g = make_grid(c.L, c.M);
  auto wrap = [](std::uint64_t k, auto&& fn) {
    try {
      return fn();
    } catch (const SimulationError& e) {
      const std::string m = e.what(), prefix = std::string(to_string(e.kind())) + ": ";
      throw SimulationError(e.kind(), "trajectory " + std::to_string(k) + ": " +
                                          (m.rfind(prefix, 0) == 0 ? m.substr(prefix.size()) : m));
    }
  };
  if (c.model == "grw-jump" || c.model == "grw-generation") {
    std::vector<SchrodingerParticle> parts;
    for (double m : c.masses) parts.emplace_back(m);
    const GrwModel<SchrodingerParticle> model(parts, c.tau, c.a);
    const auto psi = build_state<ScalarField>(
        c, [&](int, const io::PacketSpec& p) { return gaussian_scalar(g, 0.0, p.x0, p.width, p.k0); });
    typename GrwModel<SchrodingerParticle>::RunOptions ro;
    ro.mode = c.model == "grw-jump" ? GrwMode::Jump : GrwMode::Generation;
    ro.horizon = c.horizon;
    ro.generations = c.generations;
    ro.max_flashes = static_cast<size_t>(c.max_flashes);
    return parallel_map<FlashHistory>(c.trajectories, workers,
                                      [&](size_t k) { return wrap(k, [&] { return model.run(psi, 0.0, ro, seed, k); }); });
  }
  std::vector<DiracParticle> parts;
  for (double m : c.masses) parts.emplace_back(m);
  const FlashModel model(parts, c.tau, c.a);
  const auto psi = build_state<SpinorField>(
      c, [&](int i, const io::PacketSpec& p) { return dirac_packet(g, c.masses[i], p.x0, p.width, p.k0); });
  if (c.model == "flash") {
    FlashModel::RunOptions ro;
    ro.generations = c.generations;
    ro.collapse_last = false;
    return parallel_map<FlashHistory>(c.trajectories, workers, [&](size_t k) {
      return wrap(k, [&] { return model.run(psi, c.initial_flashes, ro, seed, k); });
    });
  }
  const TemporalModel tm(model);
  TemporalModel::RunOptions ro;
  ro.t_max = c.t_max;
  ro.max_flashes = static_cast<size_t>(c.generations);
  return parallel_map<FlashHistory>(c.trajectories, workers, [&](size_t k) {
    return wrap(k, [&] { return tm.run(psi, c.initial_flashes, ro, seed, k); });
  });
}

inline io::RecordHeader record_header(const io::RunConfig& c, std::uint64_t seed) {
  io::RecordHeader h;
  h.params = io::params_json(c);
  h.params_hash = io::params_hash(h.params);
  h.run_id = io::run_id(h.params_hash, seed);
  h.model = c.model;
  h.seed = seed;
  h.trajectories = c.trajectories;
  h.labels = c.particles();
  return h;
}

}  // namespace grwf
