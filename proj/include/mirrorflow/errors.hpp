#pragma once

#include <stdexcept>
#include <string>

#include "mirrorflow/types.hpp"

namespace mirrorflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the open domain of a potential or map.
/// `coordinate()` is -1 when the failure is not tied to one entry.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, Index coordinate = -1)
      : Error(what), coordinate_(coordinate) {}
  Index coordinate() const { return coordinate_; }

 private:
  Index coordinate_;
};

class UnsupportedTemperature : public Error {
 public:
  using Error::Error;
};

class SingularConstraint : public Error {
 public:
  using Error::Error;
};

class StepTooLarge : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// An integrated state left the domain of its potential.
class DomainExit : public Error {
 public:
  DomainExit(const std::string& what, double time, Index coordinate)
      : Error(what), time_(time), coordinate_(coordinate) {}
  double time() const { return time_; }
  Index coordinate() const { return coordinate_; }

 private:
  double time_;
  Index coordinate_;
};

/// Non-finite values showed up while integrating or iterating.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double time = 0.0) : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class ConditionFailure : public Error {
 public:
  ConditionFailure(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

class InstanceError : public Error {
 public:
  using Error::Error;
};

/// Bad user-facing configuration: unknown registry names, malformed specs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mirrorflow
