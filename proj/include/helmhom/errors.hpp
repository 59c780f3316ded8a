// Error taxonomy for the helmhom core. Every failure mode that callers can
// act on gets its own type; all derive from Error so the C API can map any
// of them onto a status code.
#pragma once

#include <stdexcept>
#include <string>

namespace helmhom {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Requested volume fraction exceeds the hard-core saturation cap.
class UnreachableFraction : public Error {
 public:
  using Error::Error;
};

// Mesh step does not divide the domain, or the scatterer boundary does not
// land on grid lines.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Direct factorization failed (structurally or numerically singular matrix).
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// Linear solve finished but the residual check failed.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

// Point query outside the meshed domain.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

// Exterior evaluation point closer than the trusted distance to the
// scatterer boundary.
class TooCloseToBoundary : public Error {
 public:
  using Error::Error;
};

// Green-function evaluation at (numerically) coincident points.
class SingularPoint : public Error {
 public:
  using Error::Error;
};

// A norm/region request selected no triangles.
class RegionEmpty : public Error {
 public:
  using Error::Error;
};

// Rate fit requested with fewer than three distinct epsilons.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Malformed config file / unknown key / unparsable value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File I/O or serialization format failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace helmhom
