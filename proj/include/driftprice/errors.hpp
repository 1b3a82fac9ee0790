#pragma once

#include <stdexcept>
#include <string>

namespace driftprice {

// Startup-time problems: malformed config, dimension mismatch, degenerate box.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-range algorithmic parameter (non-positive delta, N < 1, ...).
class ParameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite feedback or similar bad observations.
class ObservationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation called out of order, e.g. a mirror step at the batch-terminal period.
class SequencingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Environment queried at an infeasible price.
class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal invariant broken; indicates a configuration bug and aborts the run.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

void warn(const std::string& message);

// Suppress warnings written to stderr (used by tests and the acceptance suite).
void set_warnings_enabled(bool enabled);

}  // namespace driftprice
