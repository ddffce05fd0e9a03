#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace whipple {

enum class ErrorKind {
  DomainError,
  NoContactSolution,
  SingularConstraintJacobian,
  SingularContact,
  SingularMass,
  IntegratorFailure,
  NoCriticalSpeed,
  NotAnEquilibrium,
  TrivialUnstable,
  SingularKKT,
  ProjectionFailure,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` is the machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace whipple
