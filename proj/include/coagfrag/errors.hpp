#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace coagfrag {

/// Raised when a parameter or configuration value violates its invariants.
/// `field()` names the offending entry using the dotted config path.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raised when a time integration aborts (step underflow, Newton failure,
/// non-finite state) in a context that cannot return a partial result.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coagfrag
