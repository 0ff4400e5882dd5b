#pragma once

#include <stdexcept>
#include <string>

namespace presstopo {

// Bad sizes, non-positive dimensions, out-of-range densities.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Degenerate or non-convex element geometry.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation point on or outside an element boundary.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Singular systems, failed factorizations, residuals above tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A state object that does not belong to the design it is used with.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace presstopo
