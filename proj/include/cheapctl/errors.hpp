#pragma once

#include <stdexcept>
#include <string>

namespace cheapctl {

struct InvalidDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonPositiveEpsilon : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InconsistentNormalForm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteCost : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotStabilizable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateConstants : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotMinimumPhase : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DecrementViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySamples : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cheapctl
