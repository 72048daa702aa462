#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdeinfer {

/// Precondition violated by the caller (shapes, ranges, signs).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A simulated state became non-finite or left the blowup guard.
class SimulationBlowup : public std::runtime_error {
 public:
  SimulationBlowup(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Non-finite entry while assembling the estimating-equation system.
class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(std::size_t row, std::size_t col, const std::string& what)
      : std::runtime_error(what), row_(row), col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class DegeneratePathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdeinfer
