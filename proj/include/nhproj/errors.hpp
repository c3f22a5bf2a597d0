#pragma once

#include <stdexcept>
#include <string>

namespace nhproj {

/// Base class for every geometric or numerical failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMetric : public Error {
 public:
  using Error::Error;
};

class DifferentiationFailure : public Error {
 public:
  using Error::Error;
};

/// Constraint covectors are linearly dependent, or their Gram matrix is singular.
class DegenerateConstraints : public Error {
 public:
  using Error::Error;
};

class IllPosedDynamics : public Error {
 public:
  using Error::Error;
};

class NotSymplecticOnLeaf : public Error {
 public:
  using Error::Error;
};

/// The bracket matrix of a constraint set is not invertible, so Dirac's
/// formula does not apply.
class FirstClassConstraint : public Error {
 public:
  using Error::Error;
};

}  // namespace nhproj
