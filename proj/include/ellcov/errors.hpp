#pragma once

#include <stdexcept>
#include <string>

namespace ellcov {

// All numerical and validation failures derive from Error so that callers
// (the scenario harness in particular) can record them as failed checks.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidModulus : public Error {
 public:
  using Error::Error;
};

class NonConvergent : public Error {
 public:
  using Error::Error;
};

// Raised instead of returning a huge value when an argument sits on (or
// within the guard distance of) a pole or a zero of a denominator.
class NearSingularity : public Error {
 public:
  using Error::Error;
};

class InvalidIndex : public Error {
 public:
  using Error::Error;
};

class NotTraceless : public Error {
 public:
  using Error::Error;
};

class DegenerateBranchPoints : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class PathThroughBranchPoint : public Error {
 public:
  using Error::Error;
};

class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

class SingularityOnPath : public Error {
 public:
  using Error::Error;
};

class ZeroResidue : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StateFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ellcov
