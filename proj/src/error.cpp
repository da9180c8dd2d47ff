// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grngc/error.hpp"

namespace grngc {

std::string format_shape(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

ShapeError::ShapeError(std::string op, std::vector<std::size_t> lhs,
                       std::vector<std::size_t> rhs)
    : Error("shape", op + ": incompatible shapes " + format_shape(lhs) +
                         (rhs.empty() ? std::string() : " and " + format_shape(rhs))),
      op_(std::move(op)),
      lhs_(std::move(lhs)),
      rhs_(std::move(rhs)) {}

ParseError::ParseError(const std::string& path, std::size_t row,
                       std::size_t column, const std::string& message)
    : Error("parse", path + ": row " + std::to_string(row) +
                         (column == npos ? std::string()
                                         : ", column " + std::to_string(column)) +
                         ": " + message),
      row_(row),
      column_(column) {}

}  // namespace grngc
