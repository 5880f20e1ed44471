#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

// Bad config text, unknown key or out-of-range value. `key` is the dotted
// path (e.g. "grid.N"); `line` is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, std::size_t line, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string key_;
  std::size_t line_;
};

// Base for failures of a numerical procedure (as opposed to bad input).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SimulationDiverged : public NumericError {
public:
  SimulationDiverged(std::size_t path, std::size_t node, const std::string& what)
      : NumericError(what), path_(path), node_(node) {}

  std::size_t path() const noexcept { return path_; }
  std::size_t node() const noexcept { return node_; }

private:
  std::size_t path_;
  std::size_t node_;
};

// log-type reward evaluated at a nonpositive state.
class DomainError : public NumericError {
public:
  DomainError(std::size_t path, std::size_t node, const std::string& what)
      : NumericError(what), path_(path), node_(node) {}

  std::size_t path() const noexcept { return path_; }
  std::size_t node() const noexcept { return node_; }

private:
  std::size_t path_;
  std::size_t node_;
};

class RegressionError : public NumericError {
public:
  using NumericError::NumericError;
};

class NotConverged : public NumericError {
public:
  NotConverged(std::vector<double> history, const std::string& what)
      : NumericError(what), history_(std::move(history)) {}

  const std::vector<double>& history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

}  // namespace volterra
