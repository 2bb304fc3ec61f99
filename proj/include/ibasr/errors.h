// ibasr/errors.h
//
// Exception types shared by every module. Each maps to one failure class in
// the module contracts (shape mismatch, misuse of an API, infeasible lattice,
// bad configuration, malformed data, non-finite evaluation).

#ifndef IBASR_ERRORS_H_
#define IBASR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ibasr {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ibasr

#endif  // IBASR_ERRORS_H_
