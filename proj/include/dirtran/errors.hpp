#ifndef DIRTRAN_ERRORS_HPP
#define DIRTRAN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dirtran {

/// Base class for all library exceptions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Caller broke an interface contract (wrong dimension, bad option value).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(what) {}
};

/// Numeric input contained NaN or infinity.
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

/// A Jacobian entry came out non-finite.
class LinearizationFailure : public Error {
 public:
  explicit LinearizationFailure(const std::string& what) : Error(what) {}
};

/// An integration step produced a non-finite state.
class IntegrationFailure : public Error {
 public:
  explicit IntegrationFailure(const std::string& what) : Error(what) {}
};

/// Riccati backward pass diverged; node() identifies where.
class StabilizationFailure : public Error {
 public:
  StabilizationFailure(const std::string& what, int node)
      : Error(what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

/// Incremental initialization was requested without a prior solution.
class MissingPrior : public Error {
 public:
  explicit MissingPrior(const std::string& what) : Error(what) {}
};

/// Malformed configuration or task file.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace dirtran

#endif  // DIRTRAN_ERRORS_HPP
