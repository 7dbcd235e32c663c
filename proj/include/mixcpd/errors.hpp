#pragma once

#include <stdexcept>
#include <string>

namespace mixcpd {

// Parameter outside the admissible range of an operation.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// A detector reached a state in which its statistic is undefined.
class StateError : public std::runtime_error {
 public:
  explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// A Monte Carlo estimate could not be formed (e.g. no surviving trials).
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

// Input data (e.g. an observation CSV) could not be read.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration document failed to load or validate. `field` names the
// offending key path, e.g. "montecarlo.trials".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace mixcpd
