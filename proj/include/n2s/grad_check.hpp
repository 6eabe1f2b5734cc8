// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "n2s/error.hpp"

namespace n2s {

inline constexpr double kFiniteDifferenceStep = 1e-5;

/// |a - n| / max(1, |a|, |n|)
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

/// Compares `analytic` against central differences of `loss` taken by
/// perturbing each coordinate of `x` in place (restored afterwards).
inline GradCheckResult grad_check(const std::function<double()>& loss, std::span<double> x,
                                  std::span<const double> analytic, double step = kFiniteDifferenceStep) {
  if (x.size() != analytic.size()) throw ShapeError("grad_check: gradient and input sizes differ");
  GradCheckResult res;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + step;
    const double up = loss();
    x[k] = saved - step;
    const double down = loss();
    x[k] = saved;
    const double err = relative_error(analytic[k], (up - down) / (2.0 * step));
    if (err > res.max_relative_error) {
      res.max_relative_error = err;
      res.worst_index = k;
    }
  }
  return res;
}

}  // namespace n2s
