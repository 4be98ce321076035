#pragma once

#include <stdexcept>
#include <string>

namespace mfes {

/// A matrix factorization failed even after the jitter escalation ladder.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double jitter_used)
      : std::runtime_error(what), jitter_(jitter_used) {}

  double jitter_used() const { return jitter_; }

 private:
  double jitter_ = 0.0;
};

/// Riccati iteration did not converge for the requested weights.
class NotStabilizableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run-configuration file is malformed or violates the schema.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfes
