// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <memory>
#include <string>

#include "grngc/forecasters.hpp"

namespace grngc {

void SplineSpec::validate() const {
  if (degree < 1 || degree > 30) {
    throw ValueError("spline degree must be in [1, 30], got " + std::to_string(degree));
  }
  if (grid_size < 2) {
    throw ValueError("spline grid_size must be >= 2, got " + std::to_string(grid_size));
  }
  if (!(lo < hi)) throw ValueError("spline range requires lo < hi");
}

std::vector<double> SplineSpec::knots() const {
  validate();
  const double h = (hi - lo) / grid_size;
  std::vector<double> t(static_cast<std::size_t>(grid_size + 2 * degree + 1));
  for (std::size_t m = 0; m < t.size(); ++m) {
    t[m] = lo + (static_cast<double>(m) - degree) * h;
  }
  // Pin the range ends exactly so clamped inputs land on them.
  t[static_cast<std::size_t>(degree)] = lo;
  t[static_cast<std::size_t>(degree + grid_size)] = hi;
  return t;
}

std::vector<double> bspline_basis(double x, const SplineSpec& spec) {
  const auto t = spec.knots();
  std::vector<double> out(spec.basis_count());
  diff::bspline_values(t, spec.degree, std::clamp(x, spec.lo, spec.hi), out);
  return out;
}

diff::Var bspline_basis(const diff::Var& x, const SplineSpec& spec) {
  auto knots = std::make_shared<const std::vector<double>>(spec.knots());
  return diff::bspline(diff::clamp(x, spec.lo, spec.hi), std::move(knots), spec.degree);
}

}  // namespace grngc
