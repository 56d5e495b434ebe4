#pragma once

#include <stdexcept>
#include <string>

namespace drt {

// Common base so callers can catch everything from this library at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files: bad JSON, missing fields, wrong types.
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Structurally valid input that violates a model rule (duplicate node ids,
// nonpositive reactance, unknown node reference, ...).
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// A well-posed problem instance with no feasible point.
struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& msg) : Error(msg) {}
};

// Numerical breakdown: singular KKT systems, iteration caps, residuals that
// refuse to go below tolerance.
struct NumericsError : Error {
  explicit NumericsError(const std::string& msg) : Error(msg) {}
};

}  // namespace drt
