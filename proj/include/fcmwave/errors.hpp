#pragma once

#include <stdexcept>
#include <string>

namespace fcmwave {

/// Invalid input: bad configuration, mismatched arguments, violated
/// preconditions. The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Base for failures of the numerics themselves. The CLI maps these to
/// exit code 2.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
  DivergenceError(int step, double norm)
      : NumericalError("instability detected: |psi|_inf = " +
                       std::to_string(norm) + " at step " +
                       std::to_string(step)),
        step_(step) {}

  int step() const { return step_; }

private:
  int step_;
};

class EigenSolverError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IterationLimitError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace fcmwave
