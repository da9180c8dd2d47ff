// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over dense double tensors.
//
// A Var is a shared handle to a Node. Every operation below records its
// parents and the information its backward rule needs. Backward rules are
// written in terms of these same operations, so when `create_graph` is set
// the gradients returned by `backward` are themselves recorded nodes and can
// be differentiated again.
//
// Broadcasting is limited to scalar-vs-tensor (an operand with exactly one
// element). Any other shape mix raises ShapeError.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "grngc/error.hpp"

namespace grngc::diff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScale,
  kShift,
  kMatMul,
  kTranspose,
  kSum,
  kExpand,
  kSumAll,
  kBroadcast,
  kAbs,
  kSquare,
  kSigmoid,
  kExp,
  kConcat,
  kSlice,
  kPad,
  kReshape,
  kClamp,
  kBSpline,
  kDotLast,
  kScaleLast,
};

const char* op_name(OpKind op);

class Var;

// Operation-specific data kept for the backward rule.
struct OpAttrs {
  std::size_t axis = 0;
  std::size_t begin = 0;
  std::size_t count = 0;
  double scalar = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int order = 0;
  bool transpose_a = false;
  bool transpose_b = false;
  std::shared_ptr<const std::vector<double>> knots;
};

// Flat value storage. Copies share memory, so reshape can return a view of
// its operand instead of a copy. Fresh buffers from `uninitialized` are not
// zeroed.
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(const std::vector<double>& values);
  static Buffer uninitialized(std::size_t size);
  static Buffer filled(std::size_t size, double value);

  std::size_t size() const noexcept { return size_; }
  double* data() noexcept { return data_.get(); }
  const double* data() const noexcept { return data_.get(); }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double at(std::size_t i) const;
  std::span<double> span() noexcept { return {data(), size_}; }
  std::span<const double> span() const noexcept { return {data(), size_}; }
  operator std::span<double>() noexcept { return span(); }
  operator std::span<const double>() const noexcept { return span(); }

 private:
  std::shared_ptr<double[]> data_;
  std::size_t size_ = 0;
};

struct Node {
  Shape shape;
  Buffer values;
  OpKind op = OpKind::kLeaf;
  std::vector<Var> parents;
  OpAttrs attrs;
  bool requires_grad = false;
  // Set once a non-retaining backward has consumed this node.
  bool released = false;
  // Backward-rule intermediates that depend only on the forward values
  // (bspline keeps dB/dx here). Slot 0 holds a version recorded with graph
  // history, usable in any mode; slot 1 a plain one for no-grad backward.
  std::vector<Var> cache;
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Shape shape, std::vector<double> values);
  static Var parameter(Shape shape, std::vector<double> values);
  static Var scalar(double value);
  static Var zeros(const Shape& shape);
  static Var full(const Shape& shape, double value);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->values.size(); }
  std::span<const double> values() const { return node_->values.span(); }
  // Direct write access; only meaningful on leaves (parameters updated by an
  // optimizer between graph constructions). Reshapes of a leaf are views and
  // see the update.
  std::span<double> mutable_values() { return node_->values.span(); }
  double item() const;
  double at(std::size_t flat) const { return node_->values.at(flat); }
  bool requires_grad() const { return node_->requires_grad; }
  OpKind op() const { return node_->op; }
  bool is_leaf() const { return node_->op == OpKind::kLeaf; }

  // A new leaf sharing no graph history with this node.
  Var detach() const;

  Node* get() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// ---------------------------------------------------------------------------
// Grad mode
// ---------------------------------------------------------------------------

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var shift(const Var& a, double offset);
Var neg(const Var& a);

// 2-D only: [m, k] x [k, n] -> [m, n].
Var matmul(const Var& a, const Var& b);
// op(a) x op(b), where op transposes when the matching flag is set. Avoids
// materializing the transposed operand.
Var matmul(const Var& a, const Var& b, bool transpose_a, bool transpose_b);
Var transpose(const Var& a);

// Reduces `axis` away.
Var sum(const Var& a, std::size_t axis);
Var mean(const Var& a, std::size_t axis);
// Inserts a new axis of length `count` at `axis`, repeating the values.
Var expand(const Var& a, std::size_t axis, std::size_t count);
// sum(mul(a, b), last axis) without the intermediate product.
Var dot_last(const Var& a, const Var& b);
// expand(s, last axis, n) * t without the intermediate expansion; `s` has the
// shape of `t` minus its last axis.
Var scale_last(const Var& s, const Var& t);
// Rank-0 result.
Var sum_all(const Var& a);
Var mean_all(const Var& a);
// Fills `shape` with the single value of `a`.
Var broadcast(const Var& a, const Shape& shape);

Var abs(const Var& a);
Var square(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
// x * sigmoid(x)
Var silu(const Var& a);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end);
// Embeds `a` at offset `before` in a zero tensor whose `axis` has length `total`.
Var pad(const Var& a, std::size_t axis, std::size_t before, std::size_t total);
Var reshape(const Var& a, Shape shape);
// Elementwise clamp to [lo, hi]; the gradient is zero outside the interval.
Var clamp(const Var& a, double lo, double hi);

// B-spline basis expansion of every element of `a` on the given knot vector.
// Output shape is a.shape + [knots.size() - order - 1].
Var bspline(const Var& a, std::shared_ptr<const std::vector<double>> knots,
            int order);

// Values of the order-`order` B-spline basis at x; writes
// knots.size() - order - 1 entries into `out`.
void bspline_values(std::span<const double> knots, int order, double x,
                    std::span<double> out);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

struct BackwardOptions {
  // Record the gradient computation so the results can be differentiated.
  bool create_graph = false;
  // Keep the graph usable for another backward. Defaults to create_graph.
  std::optional<bool> retain_graph;
};

// Gradients of the scalar `root` with respect to each of `wrt`. Targets that
// `root` does not depend on receive exact zeros.
//
// Without retention the traversed intermediate nodes are released; a second
// backward reaching them throws GraphReleasedError.
std::vector<Var> backward(const Var& root, std::span<const Var> wrt,
                          BackwardOptions options = {});
std::vector<Var> backward(const Var& root, std::span<const Var> wrt,
                          bool create_graph);

// Nodes reachable from `root` in reverse topological order (root first).
// Every node appears after all of its consumers.
struct Tape {
  std::vector<Var> order;
};
Tape record_tape(const Var& root);

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

using ScalarFn = std::function<double(std::span<const double>)>;

// Central-difference gradient estimate of f at `at`.
std::vector<double> finite_difference(const ScalarFn& f,
                                      std::span<const double> at,
                                      double step = 1e-5);

}  // namespace grngc::diff
