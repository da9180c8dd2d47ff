// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include "grngc/diffengine.hpp"

namespace grngc::diff {

std::vector<double> finite_difference(const ScalarFn& f,
                                      std::span<const double> at, double step) {
  if (!(step > 0)) throw ValueError("finite_difference: step must be positive");
  std::vector<double> x(at.begin(), at.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw ValueError("finite_difference: non-finite function value at coordinate " +
                       std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace grngc::diff
