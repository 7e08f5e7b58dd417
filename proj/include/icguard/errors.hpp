#pragma once

#include <stdexcept>
#include <string>

namespace icguard {

// Configuration or modeling-assumption failure. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A validated structural assumption of the observer design does not hold for
// the supplied model (non-Hurwitz dynamics of the unmeasured error,
// rank-deficient input matching, ...). Also exit code 2.
class AssumptionError : public ConfigError {
 public:
  explicit AssumptionError(const std::string& what) : ConfigError(what) {}
};

// Failure while executing a run (non-finite state, I/O). Exit code 3.
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace icguard
