#pragma once

#include <stdexcept>
#include <string>

namespace srcanon {

// Out-of-range or degenerate distribution/model parameter.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Caller broke a documented precondition (unsorted timeline, bad assignment).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// A-D sample whose estimated mean collapses the fitted CDF.
class DegenerateSampleError : public std::invalid_argument {
 public:
  explicit DegenerateSampleError(const std::string& what) : std::invalid_argument(what) {}
};

// Experiment or manifest configuration that cannot be run.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace srcanon
