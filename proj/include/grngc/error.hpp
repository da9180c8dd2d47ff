// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace grngc {

/// Base class for every error raised by the library. `kind()` is a stable
/// short tag ("shape", "value", "io", ...) that callers can switch on.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

std::string format_shape(const std::vector<std::size_t>& shape);

/// Operand shapes do not conform for the named operation.
class ShapeError : public Error {
 public:
  ShapeError(std::string op, std::vector<std::size_t> lhs,
             std::vector<std::size_t> rhs = {});

  const std::string& op() const noexcept { return op_; }
  const std::vector<std::size_t>& lhs() const noexcept { return lhs_; }
  const std::vector<std::size_t>& rhs() const noexcept { return rhs_; }

 private:
  std::string op_;
  std::vector<std::size_t> lhs_;
  std::vector<std::size_t> rhs_;
};

/// A precondition on an argument value failed.
class ValueError : public Error {
 public:
  explicit ValueError(const std::string& message) : Error("value", message) {}
};

/// Backward was invoked through a graph whose intermediates were released.
class GraphReleasedError : public Error {
 public:
  GraphReleasedError()
      : Error("graph",
              "backward through a graph that was already released; pass "
              "retain_graph=true to the first backward call") {}
};

/// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& message)
      : Error("io", path + ": " + message), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// CSV content is malformed. Row and column are 1-based positions in the
/// file (row counts the header line when present); column is npos when the
/// whole row is at fault.
class ParseError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ParseError(const std::string& path, std::size_t row, std::size_t column,
             const std::string& message);

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// A simulation or optimization produced non-finite values.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& where, std::size_t step)
      : Error("divergence",
              where + ": non-finite value at step " + std::to_string(step)),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace grngc
