#include "canopy/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace canopy {

GradCheckReport grad_check(const std::function<double(const TensorD&)>& f, const TensorD& x,
                           const TensorD& analytic_grad, double epsilon) {
  if (epsilon < 1e-7 || epsilon > 1e-3) {
    throw std::invalid_argument("grad_check: epsilon must be in [1e-7, 1e-3], got " +
                                std::to_string(epsilon));
  }
  if (analytic_grad.size() != x.size()) {
    throw std::invalid_argument("grad_check: analytic gradient has " +
                                std::to_string(analytic_grad.size()) + " components, input has " +
                                std::to_string(x.size()));
  }
  GradCheckReport report;
  TensorD probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + epsilon;
    const double f_plus = f(probe);
    probe[i] = saved - epsilon;
    const double f_minus = f(probe);
    probe[i] = saved;

    const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
    const double analytic = analytic_grad[i];
    if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
      throw std::runtime_error("grad_check: non-finite value at coordinate " + std::to_string(i) +
                               " (analytic=" + std::to_string(analytic) +
                               ", central-difference=" + std::to_string(numeric) + ")");
    }
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-12});
    const double rel = std::fabs(analytic - numeric) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coord = i;
      report.analytic_at_worst = analytic;
      report.numeric_at_worst = numeric;
    }
  }
  return report;
}

}  // namespace canopy
