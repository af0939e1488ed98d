#pragma once

#include <stdexcept>
#include <string>

namespace kvdelay {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names the first violated field of a config.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ScenarioMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InconsistentInputs : public Error {
 public:
  using Error::Error;
};

class EigenSolverError : public Error {
 public:
  using Error::Error;
};

class StepError : public Error {
 public:
  StepError(const std::string& message, double time, double condition_estimate)
      : Error(message), time_(time), condition_(condition_estimate) {}
  double time() const noexcept { return time_; }
  double condition_estimate() const noexcept { return condition_; }

 private:
  double time_;
  double condition_;
};

class SingularResolvent : public Error {
 public:
  SingularResolvent(const std::string& message, double lambda)
      : Error(message), lambda_(lambda) {}
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

}  // namespace kvdelay
