// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpsed {

/// Caller passed a value outside an operation's contract.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed manifest or config text. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value appeared inside the network. `layer()` names where.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, int layer)
      : std::runtime_error(what + " (layer " + std::to_string(layer) + ")"), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

/// Training produced a non-finite loss or gradient at `step()`.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long long step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

}  // namespace hpsed
