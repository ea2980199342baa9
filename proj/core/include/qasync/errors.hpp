#pragma once

#include <stdexcept>
#include <string>

namespace qasync {

// Invalid numeric parameter passed to a constructor or generator.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A point outside the problem domain was handed to an oracle.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A required constant (beta, D, ...) is missing for the requested method.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Misuse of a state machine, e.g. two queries without a response in between.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Delay sequence violates d_t <= t-1 or is otherwise unusable by the engine.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An algorithm needed more rounds than the horizon provides.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mini-batch schedule degenerated (e.g. zero inner queries).
class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qasync
