#pragma once

#include <stdexcept>
#include <string>

namespace kplate {

enum class ErrorKind {
  Domain,
  Knots,
  UnsupportedDegree,
  Parameter,
  Geometry,
  GeometryMismatch,
  Orientation,
  DegenerateInterface,
  Dimension,
  Scaling,
  Decomposition,
  Coefficient,
  PreconditionerSingular,
  Solver,
  Configuration,
  Parse,
  Io,
};

inline const char* category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Knots: return "model:knots";
    case ErrorKind::UnsupportedDegree: return "model:degree";
    case ErrorKind::Parameter: return "model:parameter";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::GeometryMismatch: return "geometry:mismatch";
    case ErrorKind::Orientation: return "geometry:orientation";
    case ErrorKind::DegenerateInterface: return "coupling:interface";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Scaling: return "solver:scaling";
    case ErrorKind::Decomposition: return "linalg:decomposition";
    case ErrorKind::Coefficient: return "linalg:coefficient";
    case ErrorKind::PreconditionerSingular: return "solver:preconditioner";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Configuration: return "config";
    case ErrorKind::Parse: return "model:parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Library exception. `category()` is the machine-readable tag reported by the
/// command line driver, e.g. "model:knots" or "solver:inner".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string tag = {})
      : std::runtime_error(message), kind_(kind), tag_(std::move(tag)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& tag() const noexcept { return tag_; }

  std::string category() const {
    std::string c = category_of(kind_);
    if (!tag_.empty()) c += ":" + tag_;
    return c;
  }

 private:
  ErrorKind kind_;
  std::string tag_;
};

inline void ensure(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace kplate
