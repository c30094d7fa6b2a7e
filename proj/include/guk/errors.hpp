#pragma once

#include <stdexcept>
#include <string>

namespace guk {

/// Input that violates a documented precondition (negative weights, bad dimensions, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy answer (singular mass matrix,
/// non-finite state, eigen-solver failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A robot reached or crossed the outer rectangle, where the barrier coordinates blow up.
class DomainViolation : public std::runtime_error {
 public:
  DomainViolation(const std::string& what, int robot) : std::runtime_error(what), robot_(robot) {}
  int robot() const { return robot_; }

 private:
  int robot_;
};

}  // namespace guk
