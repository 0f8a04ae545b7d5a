#pragma once

#include <stdexcept>
#include <string>

namespace greendc {

// Base for everything this library throws on purpose. Callers that want
// blanket "user error vs bug" handling catch SimError vs std::exception.
class SimError : public std::runtime_error {
public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public SimError {
public:
  using SimError::SimError;
};

class IoError : public SimError {
public:
  using SimError::SimError;
};

// Malformed input data; carries the 1-based row of the offending record.
class ParseError : public SimError {
public:
  ParseError(const std::string& what, std::size_t row)
      : SimError(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

class UnknownHostError : public SimError {
public:
  explicit UnknownHostError(const std::string& id)
      : SimError("unknown host: " + id) {}
};

class UnknownVmError : public SimError {
public:
  explicit UnknownVmError(const std::string& id)
      : SimError("unknown vm: " + id) {}
};

class TargetLowPowerError : public SimError {
public:
  explicit TargetLowPowerError(const std::string& host)
      : SimError("migration target is in low-power mode: " + host) {}
};

class CapacityExceededError : public SimError {
public:
  explicit CapacityExceededError(const std::string& what) : SimError(what) {}
};

class HostNotEmptyError : public SimError {
public:
  explicit HostNotEmptyError(const std::string& host)
      : SimError("host still has vms placed: " + host) {}
};

class LastActiveHostError : public SimError {
public:
  explicit LastActiveHostError(const std::string& host)
      : SimError("cannot power down the last active host: " + host) {}
};

// Interactive sizing: requested response time unreachable at any allocation.
class InfeasibleTargetError : public SimError {
public:
  using SimError::SimError;
};

class ZeroAllocationError : public SimError {
public:
  using SimError::SimError;
};

class EmptyWindowError : public SimError {
public:
  using SimError::SimError;
};

class EmptySeriesError : public SimError {
public:
  using SimError::SimError;
};

class InsufficientDataError : public SimError {
public:
  using SimError::SimError;
};

class SchemaMismatchError : public SimError {
public:
  using SimError::SimError;
};

// State broke a model invariant mid-run; always a bug or corrupt input,
// never silently absorbed.
class InvariantViolationError : public SimError {
public:
  using SimError::SimError;
};

}  // namespace greendc
