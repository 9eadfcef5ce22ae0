#pragma once

// Test-only numerical differentiation oracle, independent of the analytic
// backward pass it checks. Fourth-order central stencil: the plain 3-point
// formula cannot resolve gradients near 1e-7 (BPTT tails) to the 1e-4
// relative accuracy the checks demand.

#include <functional>
#include <vector>

namespace rcgen_test {

inline double central_diff(const std::function<double()>& eval, double& param,
                           double h = 2e-3) {
  const double orig = param;
  param = orig + h;
  const double f1 = eval();
  param = orig - h;
  const double fm1 = eval();
  param = orig + 2.0 * h;
  const double f2 = eval();
  param = orig - 2.0 * h;
  const double fm2 = eval();
  param = orig;
  return (fm2 - 8.0 * fm1 + 8.0 * f1 - f2) / (12.0 * h);
}

}  // namespace rcgen_test
