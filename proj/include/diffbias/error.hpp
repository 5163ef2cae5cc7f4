#pragma once

#include <stdexcept>
#include <string>

namespace diffbias {

/// Precondition or invariant violated by caller-supplied input.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solve could not be carried out at working precision.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class SamplingError : public std::runtime_error {
 public:
  SamplingError(const std::string& what, int step, double sigma)
      : std::runtime_error(what), step_(step), sigma_(sigma) {}
  int step() const noexcept { return step_; }
  double sigma() const noexcept { return sigma_; }

 private:
  int step_;
  double sigma_;
};

}  // namespace diffbias
