#pragma once

#include <cmath>
#include <functional>
#include <span>

namespace bmlab {

struct BisectionResult {
  double root = 0.0;
  double lo = 0.0;  ///< final bracket
  double hi = 0.0;
  int iterations = 0;
};

/// Bisection on a bracket where f(lo) <= 0 <= f(hi). Stops after max_iter
/// halvings, on an exact zero, or once the bracket cannot shrink further in
/// double precision. The returned root is whichever final endpoint or
/// midpoint has the smaller |f|.
BisectionResult bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                                  int max_iter = 200);

/// Adaptive Simpson quadrature on [a, b], refined to an absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                 int max_depth = 50);

/// Integrates piecewise across the given interior breakpoints (sorted, any
/// outside (a, b) ignored) so kinks and jumps never straddle a panel.
double integrate_with_breaks(const std::function<double(double)>& f, double a, double b,
                             std::span<const double> breaks, double tol = 1e-12);

}  // namespace bmlab
