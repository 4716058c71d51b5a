#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hcmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised on malformed inputs (dimension mismatch, invalid horizons, bad options).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a quantity divides by a stage cost that vanishes (x = 0 and friends).
class DegenerateState : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Raised when a bound's hypotheses are not met by its inputs.
class Inapplicable : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class UnsupportedConfiguration : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace hcmpc
