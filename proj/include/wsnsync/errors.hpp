#pragma once

#include <stdexcept>
#include <string>

namespace wsnsync {

/// Raised when a clock is read or synchronized at a hardware time that lies
/// before the start of its current segment.
class ClockOrderError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised by estimators and bounds whose design has no spread in t_d
/// (zero variance, zero span, or too few points).
class DegenerateDesignError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An estimate was requested before enough observations were ingested.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration. `field` names the offending key, e.g. "/si".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace wsnsync
