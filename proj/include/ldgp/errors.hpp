#pragma once

#include <stdexcept>
#include <string>

namespace ldgp {

// Input or configuration rejected before any numerics ran.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization or likelihood failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ldgp
