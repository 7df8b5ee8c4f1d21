#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "cape/types.hpp"

namespace cape {

/// R^m -> R^n map under test, flattened on both ends.
using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central finite differences against an analytic Jacobian (n x m). Returns
/// the worst relative deviation, |fd - analytic| / max(1, |fd|, |analytic|).
inline double gradient_check(const VectorFunction& f, const Eigen::VectorXd& point,
                             const Matrix<double>& analytic_jacobian, double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("gradient_check: step must be positive");
  }
  if (!point.allFinite()) {
    throw std::invalid_argument("gradient_check: point must be finite");
  }
  const Eigen::VectorXd probe = f(point);
  if (analytic_jacobian.rows() != probe.size() || analytic_jacobian.cols() != point.size()) {
    throw std::invalid_argument("gradient_check: Jacobian shape must be n_outputs x n_inputs");
  }
  double worst = 0.0;
  Eigen::VectorXd hi = point, lo = point;
  for (Index i = 0; i < point.size(); ++i) {
    hi[i] = point[i] + step;
    lo[i] = point[i] - step;
    const Eigen::VectorXd fd = (f(hi) - f(lo)) / (2.0 * step);
    hi[i] = point[i];
    lo[i] = point[i];
    for (Index r = 0; r < fd.size(); ++r) {
      const double an = analytic_jacobian(r, i);
      const double rel = std::abs(fd[r] - an) / std::max({1.0, std::abs(fd[r]), std::abs(an)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace cape
