#pragma once

#include <stdexcept>
#include <string>

namespace meshpinn {

/// Base for every error the library throws. `exit_code()` maps onto the CLI
/// contract: 2 for bad input, 3 for numerical failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class InputError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class InvalidGeometry : public InputError {
 public:
  using InputError::InputError;
};

class EmptyTrainingSet : public InputError {
 public:
  using InputError::InputError;
};

class EmptyBatch : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateCell : public InputError {
 public:
  using InputError::InputError;
};

class NonFiniteLoss : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFiniteGradient : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergedIteration : public NumericalError {
 public:
  DivergedIteration(const std::string& what, int sweep) : NumericalError(what), sweep_(sweep) {}
  int sweep() const noexcept { return sweep_; }

 private:
  int sweep_;
};

}  // namespace meshpinn
