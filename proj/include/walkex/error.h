// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_ERROR_H_
#define WALKEX_ERROR_H_

#include <stdexcept>
#include <string>

namespace walkex {

// Bad caller-supplied value (out-of-range id, invalid size).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A structural precondition does not hold (e.g. node set not connected).
class ConstraintError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Programming contract violated: shape mismatch, infeasible action, ...
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file. The message always carries "file:line: ".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

}  // namespace walkex

#endif  // WALKEX_ERROR_H_
