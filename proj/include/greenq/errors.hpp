#pragma once

#include <stdexcept>
#include <string>

namespace greenq {

// A parameter or strategy lies outside the domain where the model is defined.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The game has no interior solution for these parameters (alpha = 1, b = 0,
// cs = 0, ...). Thrown instead of returning NaN or a boundary value.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace greenq
