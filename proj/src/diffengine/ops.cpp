// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Core>

#include "grngc/diffengine.hpp"

namespace grngc::diff {

namespace {

thread_local bool t_grad_enabled = true;

Var make_node(OpKind op, Shape shape, Buffer values,
              std::vector<Var> parents, OpAttrs attrs = {}) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  bool tracked = false;
  if (t_grad_enabled) {
    for (const Var& p : parents) tracked = tracked || p.requires_grad();
  }
  if (tracked) {
    node->op = op;
    node->parents = std::move(parents);
    node->attrs = std::move(attrs);
    node->requires_grad = true;
  }
  return Var(std::move(node));
}

enum class Layout { kSame, kLeftScalar, kRightScalar };

Layout binary_layout(const char* op, const Var& a, const Var& b) {
  if (a.shape() == b.shape()) return Layout::kSame;
  if (a.size() == 1) return Layout::kLeftScalar;
  if (b.size() == 1) return Layout::kRightScalar;
  throw ShapeError(op, a.shape(), b.shape());
}

template <typename F>
Var binary(OpKind kind, const char* name, const Var& a, const Var& b, F f) {
  const Layout layout = binary_layout(name, a, b);
  const auto av = a.values();
  const auto bv = b.values();
  Buffer out;
  Shape shape;
  switch (layout) {
    case Layout::kSame:
      shape = a.shape();
      out = Buffer::uninitialized(av.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
      break;
    case Layout::kLeftScalar:
      shape = b.shape();
      out = Buffer::uninitialized(bv.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[0], bv[i]);
      break;
    case Layout::kRightScalar:
      shape = a.shape();
      out = Buffer::uninitialized(av.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[0]);
      break;
  }
  return make_node(kind, std::move(shape), std::move(out), {a, b});
}

template <typename F>
Var unary(OpKind kind, const Var& a, F f, OpAttrs attrs = {}) {
  const auto av = a.values();
  Buffer out = Buffer::uninitialized(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return make_node(kind, a.shape(), std::move(out), {a}, std::move(attrs));
}

void check_axis(const char* op, const Var& a, std::size_t axis,
                bool allow_end = false) {
  const std::size_t limit = allow_end ? a.rank() : a.rank() - 1;
  if (a.rank() == 0 && !allow_end) throw ShapeError(op, a.shape());
  if (axis > limit) {
    throw ShapeError(std::string(op) + " (axis " + std::to_string(axis) + ")",
                     a.shape());
  }
}

// [outer, axis, inner] split of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kShift: return "shift";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kSum: return "sum";
    case OpKind::kExpand: return "expand";
    case OpKind::kSumAll: return "sum_all";
    case OpKind::kBroadcast: return "broadcast";
    case OpKind::kAbs: return "abs";
    case OpKind::kSquare: return "square";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kExp: return "exp";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kPad: return "pad";
    case OpKind::kReshape: return "reshape";
    case OpKind::kClamp: return "clamp";
    case OpKind::kBSpline: return "bspline";
    case OpKind::kDotLast: return "dot_last";
    case OpKind::kScaleLast: return "scale_last";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Buffer
// ---------------------------------------------------------------------------

Buffer::Buffer(const std::vector<double>& values) : Buffer(uninitialized(values.size())) {
  std::copy(values.begin(), values.end(), data());
}

Buffer Buffer::uninitialized(std::size_t size) {
  Buffer b;
  b.data_ = std::shared_ptr<double[]>(new double[size]);
  b.size_ = size;
  return b;
}

Buffer Buffer::filled(std::size_t size, double value) {
  Buffer b = uninitialized(size);
  std::fill_n(b.data(), size, value);
  return b;
}

double Buffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("Buffer::at");
  return data_[i];
}

// ---------------------------------------------------------------------------
// Var
// ---------------------------------------------------------------------------

Var Var::constant(Shape shape, std::vector<double> values) {
  if (numel(shape) != values.size()) {
    throw ShapeError("constant (" + std::to_string(values.size()) + " values)",
                     shape);
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = Buffer(values);
  return Var(std::move(node));
}

Var Var::parameter(Shape shape, std::vector<double> values) {
  Var v = constant(std::move(shape), std::move(values));
  v.node_->requires_grad = true;
  return v;
}

Var Var::scalar(double value) { return constant({}, {value}); }

Var Var::zeros(const Shape& shape) { return full(shape, 0.0); }

Var Var::full(const Shape& shape, double value) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->values = Buffer::filled(numel(shape), value);
  return Var(std::move(node));
}

double Var::item() const {
  if (size() != 1) throw ShapeError("item", shape());
  return node_->values[0];
}

Var Var::detach() const {
  return constant(shape(), std::vector<double>(values().begin(), values().end()));
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) {
  t_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  return binary(OpKind::kAdd, "add", a, b, [](double x, double y) { return x + y; });
}

Var sub(const Var& a, const Var& b) {
  return binary(OpKind::kSub, "sub", a, b, [](double x, double y) { return x - y; });
}

Var mul(const Var& a, const Var& b) {
  return binary(OpKind::kMul, "mul", a, b, [](double x, double y) { return x * y; });
}

Var scale(const Var& a, double factor) {
  OpAttrs attrs;
  attrs.scalar = factor;
  return unary(OpKind::kScale, a, [factor](double x) { return x * factor; }, attrs);
}

Var shift(const Var& a, double offset) {
  OpAttrs attrs;
  attrs.scalar = offset;
  return unary(OpKind::kShift, a, [offset](double x) { return x + offset; }, attrs);
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var abs(const Var& a) {
  return unary(OpKind::kAbs, a, [](double x) { return std::fabs(x); });
}

Var square(const Var& a) {
  return unary(OpKind::kSquare, a, [](double x) { return x * x; });
}

Var sigmoid(const Var& a) {
  return unary(OpKind::kSigmoid, a, [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Var exp(const Var& a) {
  return unary(OpKind::kExp, a, [](double x) { return std::exp(x); });
}

Var silu(const Var& a) { return mul(a, sigmoid(a)); }

Var clamp(const Var& a, double lo, double hi) {
  if (!(lo <= hi)) throw ValueError("clamp: lo must not exceed hi");
  OpAttrs attrs;
  attrs.lo = lo;
  attrs.hi = hi;
  return unary(OpKind::kClamp, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               attrs);
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_matrix(const Var& v) {
  return {v.values().data(), static_cast<Eigen::Index>(v.dim(0)),
          static_cast<Eigen::Index>(v.dim(1))};
}

Var matmul(const Var& a, const Var& b) { return matmul(a, b, false, false); }

Var matmul(const Var& a, const Var& b, bool transpose_a, bool transpose_b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(transpose_a ? 1 : 0);
  const std::size_t k = a.dim(transpose_a ? 0 : 1);
  const std::size_t n = b.dim(transpose_b ? 0 : 1);
  if (b.dim(transpose_b ? 1 : 0) != k) throw ShapeError("matmul", a.shape(), b.shape());
  Buffer out = Buffer::uninitialized(m * n);
  Eigen::Map<RowMat> res(out.data(), static_cast<Eigen::Index>(m),
                         static_cast<Eigen::Index>(n));
  if (k == 0) {
    res.setZero();
  } else {
    const auto lhs = as_matrix(a);
    const auto rhs = as_matrix(b);
    if (transpose_a && transpose_b) {
      res.noalias() = lhs.transpose() * rhs.transpose();
    } else if (transpose_a) {
      res.noalias() = lhs.transpose() * rhs;
    } else if (transpose_b) {
      res.noalias() = lhs * rhs.transpose();
    } else {
      res.noalias() = lhs * rhs;
    }
  }
  OpAttrs attrs;
  attrs.transpose_a = transpose_a;
  attrs.transpose_b = transpose_b;
  return make_node(OpKind::kMatMul, {m, n}, std::move(out), {a, b}, attrs);
}

Var transpose(const Var& a) {
  if (a.rank() != 2) throw ShapeError("transpose", a.shape());
  const std::size_t r = a.dim(0), c = a.dim(1);
  const auto av = a.values();
  Buffer out = Buffer::uninitialized(av.size());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  }
  return make_node(OpKind::kTranspose, {c, r}, std::move(out), {a});
}

// ---------------------------------------------------------------------------
// Reductions and broadcasts
// ---------------------------------------------------------------------------

Var sum(const Var& a, std::size_t axis) {
  check_axis("sum", a, axis);
  const AxisSplit s = split_at(a.shape(), axis);
  const auto av = a.values();
  Buffer out = Buffer::filled(s.outer * s.inner, 0.0);
  if (s.inner == 1) {
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* src = av.data() + o * s.extent;
      double acc = 0.0;
      for (std::size_t r = 0; r < s.extent; ++r) acc += src[r];
      out[o] = acc;
    }
  }
  for (std::size_t o = 0; o < s.outer && s.inner > 1; ++o) {
    for (std::size_t r = 0; r < s.extent; ++r) {
      const double* src = av.data() + (o * s.extent + r) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  Shape shape = a.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  OpAttrs attrs;
  attrs.axis = axis;
  return make_node(OpKind::kSum, std::move(shape), std::move(out), {a}, attrs);
}

Var mean(const Var& a, std::size_t axis) {
  check_axis("mean", a, axis);
  const std::size_t n = a.dim(axis);
  return scale(sum(a, axis), n ? 1.0 / static_cast<double>(n) : 0.0);
}

Var expand(const Var& a, std::size_t axis, std::size_t count) {
  check_axis("expand", a, axis, /*allow_end=*/true);
  Shape shape = a.shape();
  shape.insert(shape.begin() + static_cast<std::ptrdiff_t>(axis), count);
  const AxisSplit s = split_at(shape, axis);
  const auto av = a.values();
  Buffer out = Buffer::uninitialized(s.outer * count * s.inner);
  if (s.inner == 1) {
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::fill_n(out.data() + o * count, count, av[o]);
    }
  }
  for (std::size_t o = 0; o < s.outer && s.inner > 1; ++o) {
    const double* src = av.data() + o * s.inner;
    for (std::size_t r = 0; r < count; ++r) {
      std::copy_n(src, s.inner, out.data() + (o * count + r) * s.inner);
    }
  }
  OpAttrs attrs;
  attrs.axis = axis;
  attrs.count = count;
  return make_node(OpKind::kExpand, std::move(shape), std::move(out), {a}, attrs);
}

Var dot_last(const Var& a, const Var& b) {
  if (a.rank() == 0 || a.shape() != b.shape()) throw ShapeError("dot_last", a.shape(), b.shape());
  const std::size_t n = a.shape().back();
  const std::size_t rows = n ? a.size() / n : 0;
  const auto av = a.values();
  const auto bv = b.values();
  Buffer out = Buffer::uninitialized(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * n;
    const double* y = bv.data() + r * n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    out[r] = acc;
  }
  Shape shape = a.shape();
  shape.pop_back();
  return make_node(OpKind::kDotLast, std::move(shape), std::move(out), {a, b});
}

Var scale_last(const Var& s, const Var& t) {
  if (t.rank() == 0 || s.shape() != Shape(t.shape().begin(), t.shape().end() - 1)) {
    throw ShapeError("scale_last", s.shape(), t.shape());
  }
  const std::size_t n = t.shape().back();
  const auto sv = s.values();
  const auto tv = t.values();
  Buffer out = Buffer::uninitialized(tv.size());
  for (std::size_t r = 0; r < sv.size(); ++r) {
    const double f = sv[r];
    const double* x = tv.data() + r * n;
    double* y = out.data() + r * n;
    for (std::size_t i = 0; i < n; ++i) y[i] = f * x[i];
  }
  return make_node(OpKind::kScaleLast, t.shape(), std::move(out), {s, t});
}

Var sum_all(const Var& a) {
  const auto av = a.values();
  const double total = std::accumulate(av.begin(), av.end(), 0.0);
  return make_node(OpKind::kSumAll, {}, Buffer::filled(1, total), {a});
}

Var mean_all(const Var& a) {
  return scale(sum_all(a), a.size() ? 1.0 / static_cast<double>(a.size()) : 0.0);
}

Var broadcast(const Var& a, const Shape& shape) {
  if (a.size() != 1) throw ShapeError("broadcast", a.shape(), shape);
  return make_node(OpKind::kBroadcast, shape,
                   Buffer::filled(numel(shape), a.values()[0]), {a});
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ValueError("concat: no operands");
  const Var& first = parts.front();
  check_axis("concat", first, axis);
  std::size_t total = 0;
  for (const Var& p : parts) {
    bool ok = p.rank() == first.rank();
    for (std::size_t d = 0; ok && d < p.rank(); ++d) {
      ok = d == axis || p.dim(d) == first.dim(d);
    }
    if (!ok) throw ShapeError("concat", first.shape(), p.shape());
    total += p.dim(axis);
  }
  Shape shape = first.shape();
  shape[axis] = total;
  const AxisSplit s = split_at(shape, axis);
  Buffer out = Buffer::uninitialized(numel(shape));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t ext = p.dim(axis);
    const auto pv = p.values();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pv.data() + o * ext * s.inner, ext * s.inner,
                  out.data() + (o * total + offset) * s.inner);
    }
    offset += ext;
  }
  OpAttrs attrs;
  attrs.axis = axis;
  return make_node(OpKind::kConcat, std::move(shape), std::move(out), parts, attrs);
}

Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end) {
  check_axis("slice", a, axis);
  if (begin > end || end > a.dim(axis)) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") on axis " + std::to_string(axis),
                     a.shape());
  }
  const AxisSplit s = split_at(a.shape(), axis);
  const std::size_t ext = end - begin;
  const auto av = a.values();
  Buffer out = Buffer::uninitialized(s.outer * ext * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(av.data() + (o * s.extent + begin) * s.inner, ext * s.inner,
                out.data() + o * ext * s.inner);
  }
  Shape shape = a.shape();
  shape[axis] = ext;
  OpAttrs attrs;
  attrs.axis = axis;
  attrs.begin = begin;
  return make_node(OpKind::kSlice, std::move(shape), std::move(out), {a}, attrs);
}

Var pad(const Var& a, std::size_t axis, std::size_t before, std::size_t total) {
  check_axis("pad", a, axis);
  if (before + a.dim(axis) > total) {
    throw ShapeError("pad to " + std::to_string(total) + " at offset " +
                         std::to_string(before),
                     a.shape());
  }
  Shape shape = a.shape();
  shape[axis] = total;
  const AxisSplit s = split_at(a.shape(), axis);
  const auto av = a.values();
  Buffer out = Buffer::filled(numel(shape), 0.0);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(av.data() + o * s.extent * s.inner, s.extent * s.inner,
                out.data() + (o * total + before) * s.inner);
  }
  OpAttrs attrs;
  attrs.axis = axis;
  attrs.begin = before;
  attrs.count = total;
  return make_node(OpKind::kPad, std::move(shape), std::move(out), {a}, attrs);
}

Var reshape(const Var& a, Shape shape) {
  if (numel(shape) != a.size()) throw ShapeError("reshape", a.shape(), shape);
  return make_node(OpKind::kReshape, std::move(shape), a.get()->values, {a});
}

// ---------------------------------------------------------------------------
// B-splines
// ---------------------------------------------------------------------------

namespace {

// inv[j * nk + m] = 1 / (knots[m + j] - knots[m]), or 0 for a repeated knot.
std::vector<double> reciprocal_gaps(std::span<const double> knots, int order) {
  const std::size_t nk = knots.size();
  std::vector<double> inv(static_cast<std::size_t>(order + 1) * nk, 0.0);
  for (int j = 1; j <= order; ++j) {
    for (std::size_t m = 0; m + static_cast<std::size_t>(j) < nk; ++m) {
      const double den = knots[m + static_cast<std::size_t>(j)] - knots[m];
      if (den > 0) inv[static_cast<std::size_t>(j) * nk + m] = 1.0 / den;
    }
  }
  return inv;
}

void bspline_fill(std::span<const double> knots, const double* inv, int order, double x,
                  double* out) {
  const auto nk = static_cast<std::ptrdiff_t>(knots.size());
  const std::ptrdiff_t count = nk - order - 1;
  for (std::ptrdiff_t i = 0; i < count; ++i) out[i] = 0.0;
  if (count <= 0) return;
  // Knot span s with knots[s] <= x < knots[s + 1].
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  const std::ptrdiff_t s = (it - knots.begin()) - 1;
  if (s < 0 || s >= nk - 1) return;

  // level[q] holds B_{s - j + q, j} while building degree j.
  double level[32] = {1.0};
  double next[32];
  for (int j = 1; j <= order; ++j) {
    const double* inv_j = inv + j * nk;
    for (int q = 0; q <= j; ++q) {
      const std::ptrdiff_t m = s - j + q;
      double v = 0.0;
      if (m >= 0 && m + j + 1 < nk) {
        if (q >= 1) v += (x - knots[m]) * inv_j[m] * level[q - 1];
        if (q <= j - 1) v += (knots[m + j + 1] - x) * inv_j[m + 1] * level[q];
      }
      next[q] = v;
    }
    std::copy_n(next, j + 1, level);
  }
  for (int q = 0; q <= order; ++q) {
    const std::ptrdiff_t m = s - order + q;
    if (m >= 0 && m < count) out[m] = level[q];
  }
}

}  // namespace

void bspline_values(std::span<const double> knots, int order, double x,
                    std::span<double> out) {
  const std::vector<double> inv = reciprocal_gaps(knots, order);
  bspline_fill(knots, inv.data(), order, x, out.data());
}

Var bspline(const Var& a, std::shared_ptr<const std::vector<double>> knots,
            int order) {
  if (!knots || order < 0 || order > 30 ||
      knots->size() < static_cast<std::size_t>(order) + 2) {
    throw ValueError("bspline: need order in [0, 30] and at least order + 2 knots");
  }
  const std::size_t count = knots->size() - static_cast<std::size_t>(order) - 1;
  const auto av = a.values();
  Buffer out = Buffer::uninitialized(av.size() * count);
  const std::vector<double> inv = reciprocal_gaps(*knots, order);
  for (std::size_t i = 0; i < av.size(); ++i) {
    bspline_fill(*knots, inv.data(), order, av[i], out.data() + i * count);
  }
  Shape shape = a.shape();
  shape.push_back(count);
  OpAttrs attrs;
  attrs.order = order;
  attrs.knots = std::move(knots);
  return make_node(OpKind::kBSpline, std::move(shape), std::move(out), {a},
                   std::move(attrs));
}

}  // namespace grngc::diff
