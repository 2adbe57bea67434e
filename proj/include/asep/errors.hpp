#pragma once

#include <stdexcept>
#include <string>

namespace asep {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or out-of-domain parameters (p outside (0,1), even m
// for the alternating condition, window too small, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A quadrature node or sample point landed on (or numerically on top of) a
// pole of the integrand.  With a feasible contour plan this never fires.
class PoleError : public Error {
 public:
  using Error::Error;
};

// No pair of contour radii satisfies the pole-separation constraints.
class InfeasiblePlanError : public Error {
 public:
  using Error::Error;
};

// Master-equation state space would exceed the hard cap.
class StateTooLargeError : public Error {
 public:
  using Error::Error;
};

// Simulation window too small: boundary effects contaminated the run.
class WindowError : public Error {
 public:
  using Error::Error;
};

}  // namespace asep
