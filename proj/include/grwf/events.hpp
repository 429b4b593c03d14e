#pragma once

// Flash records shared by all formulations.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "grwf/rng.hpp"
#include "grwf/spacetime.hpp"

namespace grwf {

struct FlashEvent {
  int label = 0;
  int generation = 0;  // 1 for the first flash after the initial one
  SpacetimePoint point;
  double wait = 0;  // proper time (or plain time) since the label's previous flash
  double chi = std::numeric_limits<double>::quiet_NaN();  // rapidity relative to the previous flash
};

// a flash relative to its predecessor: proper waiting time and rapidity
struct FlashCoord {
  double dT = 0;
  double chi = 0;
};

// per-collapse numerical diagnostics
struct CollapseDiagnostics {
  int label = 0;
  int generation = 0;
  double density_mass = 1;        // quadrature of the sampled density
  double norm_deficit = 0;        // |1 - surface norm| of the restricted state
  double truncation = 0;          // density mass dropped by the surface window
  double extension_correction = 0;
  double surface_norm_error = 0;  // |1 - surface norm| of the collapsed state
  double pair_probability = 0;
  bool box_warning = false;       // surface reached the periodic seam
};

struct FlashHistory {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::vector<SpacetimePoint> initial;          // per label
  std::vector<std::vector<FlashEvent>> flashes;  // per label, in generation order
  std::vector<CollapseDiagnostics> diagnostics;

  explicit FlashHistory(int labels = 0) : flashes(labels) {}

  int labels() const { return static_cast<int>(flashes.size()); }
  size_t count() const {
    size_t n = 0;
    for (const auto& f : flashes) n += f.size();
    return n;
  }

  // all flashes ordered by time, ties by label
  std::vector<FlashEvent> ordered() const {
    std::vector<FlashEvent> all;
    for (const auto& f : flashes) all.insert(all.end(), f.begin(), f.end());
    std::stable_sort(all.begin(), all.end(), [](const FlashEvent& a, const FlashEvent& b) {
      return a.point.t < b.point.t || (a.point.t == b.point.t && a.label < b.label);
    });
    return all;
  }

  // each label's flashes form a chain in the causal order starting at its initial flash
  bool causal_chains(bool timelike_only = true) const {
    for (int i = 0; i < labels(); ++i) {
      SpacetimePoint prev = initial.at(i);
      for (size_t k = 0; k < flashes[i].size(); ++k) {
        const auto& e = flashes[i][k];
        if (e.generation != static_cast<int>(k) + 1) return false;
        if (timelike_only ? !in_future(prev, e.point) : e.point.t < prev.t) return false;
        prev = e.point;
      }
    }
    return true;
  }
};

// Independent random streams of one trajectory.
struct TrajectoryStreams {
  Rng waiting, position, label, thinning;

  static TrajectoryStreams make(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t restart = 0) {
    return {Rng::stream(seed, trajectory, Purpose::Waiting, restart),
            Rng::stream(seed, trajectory, Purpose::Position, restart),
            Rng::stream(seed, trajectory, Purpose::Label, restart),
            Rng::stream(seed, trajectory, Purpose::Thinning, restart)};
  }
};

}  // namespace grwf
