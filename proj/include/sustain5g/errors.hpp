#pragma once

#include <stdexcept>
#include <string>

namespace sustain5g {

// Malformed or infeasible configuration. CLI maps this to exit code 2.
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

// Adaptive quadrature could not reach the requested tolerance.
// CLI maps this (and domain/overflow errors) to exit code 3.
class quadrature_error : public std::runtime_error {
 public:
  explicit quadrature_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sustain5g
