#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bilearn {

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The Newton or adjoint system could not be factorised.
struct LinearSolveFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An inner denoising solve failed while the learner was evaluating an iterate.
struct InnerSolveFailure : std::runtime_error {
  InnerSolveFailure(const std::string& what, double alpha, double beta)
      : std::runtime_error(what), alpha(alpha), beta(beta) {}
  double alpha;
  double beta;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bilearn
