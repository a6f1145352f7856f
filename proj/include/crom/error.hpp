#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crom {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or arguments that violate an operation's preconditions.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A configuration the implementation does not handle (e.g. non-square 2D spacing).
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Non-finite values fed into a stepper.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// NaN encountered in gradients or in the training loss.
class TrainingDivergence : public Error {
 public:
  using Error::Error;
};

/// A full-order or reduced trajectory blew past the divergence threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Snapshot does not live on the encoder's training discretization.
class DiscretizationMismatch : public Error {
 public:
  using Error::Error;
};

/// |M| * d < r: the inversion least-squares problem is underdetermined.
class WellPosednessError : public Error {
 public:
  using Error::Error;
};

/// Failure to read or write an archive/model file.
class IoError : public Error {
 public:
  using Error::Error;
};

#define CROM_EXPECT(cond, msg)                    \
  do {                                            \
    if (!(cond)) throw ::crom::ContractViolation(msg); \
  } while (0)

}  // namespace crom
