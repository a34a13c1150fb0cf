#ifndef FILTERSTAB_ERRORS_HPP
#define FILTERSTAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace filterstab {

// Thrown when a documented precondition or value-domain contract is violated
// (dimension mismatch, out-of-range parameter, invalid probability vector, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A Radon-Nikodym style operation was asked for p with respect to q although
// p is not absolutely continuous with respect to q.
class AbsoluteContinuityError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

// A grid pushforward lost more probability mass past the grid boundary than
// the allowed 1e-3; the output grid does not cover the kernel's support.
class TruncationError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

// File-level failure (unreadable path, short write, ...).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace filterstab

#endif  // FILTERSTAB_ERRORS_HPP
