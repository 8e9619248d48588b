#pragma once

#include <functional>

#include "canopy/tensor.hpp"

namespace canopy {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

/// Compares an analytic gradient of a scalar-valued function against central
/// finite differences, coordinate by coordinate, in double precision.
/// Relative error per coordinate: |a - d| / max(|a|, |d|, 1e-12).
/// epsilon must lie in [1e-7, 1e-3]. A non-finite function value or gradient
/// component is reported with the offending coordinate.
GradCheckReport grad_check(const std::function<double(const TensorD&)>& f, const TensorD& x,
                           const TensorD& analytic_grad, double epsilon);

}  // namespace canopy
