#pragma once

#include <stdexcept>
#include <string>

namespace grwf {

enum class ErrorKind {
  SpacelikeSeparated,
  GridTooCoarse,
  WindowExceeded,
  SurfaceMismatch,
  SamplerFailure,
  NormalizationFailure,
  ZeroNorm,
  CausalOrderViolation,
  BoundViolation,
  InsufficientSamples,
  SchemaMismatch,
  ConfigError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::SpacelikeSeparated: return "SpacelikeSeparated";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::WindowExceeded: return "WindowExceeded";
    case ErrorKind::SurfaceMismatch: return "SurfaceMismatch";
    case ErrorKind::SamplerFailure: return "SamplerFailure";
    case ErrorKind::NormalizationFailure: return "NormalizationFailure";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::CausalOrderViolation: return "CausalOrderViolation";
    case ErrorKind::BoundViolation: return "BoundViolation";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class SimulationError : public std::runtime_error {
 public:
  SimulationError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace grwf
