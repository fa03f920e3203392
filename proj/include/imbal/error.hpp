#pragma once

#include <stdexcept>
#include <string>

namespace imbal {

// Input that violates a documented precondition or schema.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A battery transition that would leave the state-of-charge window.
class InfeasibleError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

}  // namespace imbal
