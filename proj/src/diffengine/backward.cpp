// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>

#include "grngc/diffengine.hpp"

namespace grngc::diff {

namespace {

// Bring a gradient of the broadcast result back to the operand's shape.
Var reduce_to(const Var& g, const Var& operand) {
  if (g.shape() == operand.shape()) return g;
  return reshape(sum_all(g), operand.shape());
}

Var sign_of(const Var& a) {
  std::vector<double> s(a.size());
  const auto av = a.values();
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = av[i] > 0 ? 1.0 : (av[i] < 0 ? -1.0 : 0.0);
  }
  return Var::constant(a.shape(), std::move(s));
}

Var clamp_mask(const Var& a, double lo, double hi) {
  std::vector<double> m(a.size());
  const auto av = a.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = (av[i] >= lo && av[i] <= hi) ? 1.0 : 0.0;
  }
  return Var::constant(a.shape(), std::move(m));
}

// Maps degree r-1 basis values to derivatives of the degree r basis:
//   B'_{m,r} = r/(t[m+r]-t[m]) B_{m,r-1} - r/(t[m+r+1]-t[m+1]) B_{m+1,r-1}
Var bspline_derivative_map(const std::vector<double>& t, int order) {
  const std::size_t count = t.size() - static_cast<std::size_t>(order) - 1;
  const auto r = static_cast<double>(order);
  std::vector<double> d((count + 1) * count, 0.0);
  for (std::size_t m = 0; m < count; ++m) {
    const double left = t[m + order] - t[m];
    const double right = t[m + order + 1] - t[m + 1];
    if (left > 0) d[m * count + m] = r / left;
    if (right > 0) d[(m + 1) * count + m] = -r / right;
  }
  return Var::constant({count + 1, count}, std::move(d));
}

// Gradients for each parent of `self`, given the gradient `g` flowing into
// `self`. Entries for parents with need[i] == false are left undefined.
std::vector<Var> apply_rule(const Var& self, const Var& g,
                            const std::vector<bool>& need) {
  const Node& n = *self.get();
  const auto& ps = n.parents;
  std::vector<Var> out(ps.size());
  switch (n.op) {
    case OpKind::kLeaf:
      break;
    case OpKind::kAdd:
      if (need[0]) out[0] = reduce_to(g, ps[0]);
      if (need[1]) out[1] = reduce_to(g, ps[1]);
      break;
    case OpKind::kSub:
      if (need[0]) out[0] = reduce_to(g, ps[0]);
      if (need[1]) out[1] = reduce_to(neg(g), ps[1]);
      break;
    case OpKind::kMul:
      if (need[0]) out[0] = reduce_to(mul(g, ps[1]), ps[0]);
      if (need[1]) out[1] = reduce_to(mul(g, ps[0]), ps[1]);
      break;
    case OpKind::kScale:
      out[0] = scale(g, n.attrs.scalar);
      break;
    case OpKind::kShift:
      out[0] = g;
      break;
    case OpKind::kMatMul: {
      // self = op(A) op(B)
      const bool ta = n.attrs.transpose_a;
      const bool tb = n.attrs.transpose_b;
      if (need[0]) out[0] = ta ? matmul(ps[1], g, tb, true) : matmul(g, ps[1], false, !tb);
      if (need[1]) out[1] = tb ? matmul(g, ps[0], true, ta) : matmul(ps[0], g, !ta, false);
      break;
    }
    case OpKind::kTranspose:
      out[0] = transpose(g);
      break;
    case OpKind::kSum:
      out[0] = expand(g, n.attrs.axis, ps[0].dim(n.attrs.axis));
      break;
    case OpKind::kExpand:
      out[0] = sum(g, n.attrs.axis);
      break;
    case OpKind::kSumAll:
      out[0] = broadcast(g, ps[0].shape());
      break;
    case OpKind::kBroadcast:
      out[0] = reshape(sum_all(g), ps[0].shape());
      break;
    case OpKind::kAbs:
      out[0] = mul(g, sign_of(ps[0]));
      break;
    case OpKind::kSquare:
      out[0] = mul(g, scale(ps[0], 2.0));
      break;
    case OpKind::kSigmoid:
      // s * (1 - s), expressed through the recorded output node.
      out[0] = mul(g, mul(self, shift(neg(self), 1.0)));
      break;
    case OpKind::kExp:
      out[0] = mul(g, self);
      break;
    case OpKind::kConcat: {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::size_t ext = ps[i].dim(n.attrs.axis);
        if (need[i]) out[i] = slice(g, n.attrs.axis, offset, offset + ext);
        offset += ext;
      }
      break;
    }
    case OpKind::kSlice:
      out[0] = pad(g, n.attrs.axis, n.attrs.begin, ps[0].dim(n.attrs.axis));
      break;
    case OpKind::kPad:
      out[0] = slice(g, n.attrs.axis, n.attrs.begin,
                     n.attrs.begin + ps[0].dim(n.attrs.axis));
      break;
    case OpKind::kReshape:
      out[0] = reshape(g, ps[0].shape());
      break;
    case OpKind::kClamp:
      out[0] = mul(g, clamp_mask(ps[0], n.attrs.lo, n.attrs.hi));
      break;
    case OpKind::kBSpline: {
      // Piecewise-constant basis: derivative is zero almost everywhere.
      if (n.attrs.order == 0) break;
      Node* node = self.get();
      node->cache.resize(2);
      const std::size_t slot = grad_enabled() ? 0 : 1;
      Var deriv = node->cache[0].defined() ? node->cache[0] : node->cache[slot];
      if (!deriv.defined()) {
        const Var& x = ps[0];
        const std::size_t count = self.shape().back();
        const Var lower = bspline(x, n.attrs.knots, n.attrs.order - 1);
        const Var dmap = bspline_derivative_map(*n.attrs.knots, n.attrs.order);
        const Var lower2d = reshape(lower, {x.size(), count + 1});
        deriv = reshape(matmul(lower2d, dmap), self.shape());
        node->cache[slot] = deriv;
      }
      out[0] = dot_last(g, deriv);
      break;
    }
    case OpKind::kDotLast:
      if (need[0]) out[0] = scale_last(g, ps[1]);
      if (need[1]) out[1] = scale_last(g, ps[0]);
      break;
    case OpKind::kScaleLast:
      if (need[0]) out[0] = dot_last(g, ps[1]);
      if (need[1]) out[1] = scale_last(ps[0], g);
      break;
  }
  return out;
}

struct Frame {
  Var var;
  std::size_t next_parent = 0;
};

// Post-order (parents before consumers) over nodes that require grad.
std::vector<Var> post_order(const Var& root) {
  std::vector<Var> order;
  if (!root.requires_grad()) return order;
  std::unordered_map<Node*, bool> seen;
  std::vector<Frame> stack;
  stack.push_back({root});
  seen[root.get()] = true;
  while (!stack.empty()) {
    Frame& top = stack.back();
    Node* node = top.var.get();
    if (node->released) throw GraphReleasedError();
    if (top.next_parent < node->parents.size()) {
      const Var& parent = node->parents[top.next_parent++];
      if (parent.requires_grad() && !seen[parent.get()]) {
        seen[parent.get()] = true;
        stack.push_back({parent});
      }
      continue;
    }
    order.push_back(top.var);
    stack.pop_back();
  }
  return order;
}

}  // namespace

Tape record_tape(const Var& root) {
  Tape tape;
  tape.order = post_order(root);
  std::reverse(tape.order.begin(), tape.order.end());
  return tape;
}

std::vector<Var> backward(const Var& root, std::span<const Var> wrt,
                          bool create_graph) {
  BackwardOptions options;
  options.create_graph = create_graph;
  return backward(root, wrt, options);
}

std::vector<Var> backward(const Var& root, std::span<const Var> wrt,
                          BackwardOptions options) {
  if (!root.defined() || root.size() != 1) {
    throw ShapeError("backward (root must be scalar)",
                     root.defined() ? root.shape() : Shape{});
  }
  const bool retain = options.retain_graph.value_or(options.create_graph);

  const Tape tape = record_tape(root);
  std::unordered_map<Node*, std::size_t> index;
  index.reserve(tape.order.size());
  for (std::size_t i = 0; i < tape.order.size(); ++i) {
    index[tape.order[i].get()] = i;
  }

  // A node is needed when some target lies at or above it.
  std::vector<bool> needed(tape.order.size(), false);
  std::vector<bool> target(tape.order.size(), false);
  for (const Var& w : wrt) {
    auto it = index.find(w.get());
    if (it != index.end()) needed[it->second] = target[it->second] = true;
  }
  for (std::size_t i = tape.order.size(); i-- > 0;) {
    if (needed[i]) continue;
    for (const Var& p : tape.order[i].get()->parents) {
      auto it = index.find(p.get());
      if (it != index.end() && needed[it->second]) {
        needed[i] = true;
        break;
      }
    }
  }

  std::vector<Var> grads(tape.order.size());
  {
    std::optional<NoGradGuard> guard;
    if (!options.create_graph) guard.emplace();
    if (!tape.order.empty() && needed[0]) {
      grads[0] = Var::full(root.shape(), 1.0);
    }
    for (std::size_t i = 0; i < tape.order.size(); ++i) {
      const Var& self = tape.order[i];
      if (!needed[i] || !grads[i].defined() || self.is_leaf()) continue;
      const auto& parents = self.get()->parents;
      std::vector<bool> need(parents.size(), false);
      bool any = false;
      for (std::size_t k = 0; k < parents.size(); ++k) {
        auto it = index.find(parents[k].get());
        need[k] = it != index.end() && needed[it->second];
        any = any || need[k];
      }
      if (!any) continue;
      std::vector<Var> pg = apply_rule(self, grads[i], need);
      for (std::size_t k = 0; k < parents.size(); ++k) {
        if (!need[k] || !pg[k].defined()) continue;
        const std::size_t j = index.at(parents[k].get());
        grads[j] = grads[j].defined() ? add(grads[j], pg[k]) : pg[k];
      }
      // Intermediate gradients are no longer referenced past this point.
      if (!target[i]) grads[i] = Var();
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    auto it = index.find(w.get());
    if (it != index.end() && grads[it->second].defined()) {
      result.push_back(grads[it->second]);
    } else {
      result.push_back(Var::zeros(w.shape()));
    }
  }

  if (!retain) {
    for (const Var& v : tape.order) {
      Node* node = v.get();
      if (node->op == OpKind::kLeaf) continue;
      node->released = true;
      node->parents.clear();
      node->cache.clear();
    }
  }
  return result;
}

}  // namespace grngc::diff
