#include "bmlab/numerics.hpp"

#include <algorithm>
#include <vector>

namespace bmlab {

BisectionResult bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                                  int max_iter) {
  BisectionResult r{lo, lo, hi, 0};
  double f_lo = f(lo);
  double f_hi = f(hi);
  for (; r.iterations < max_iter; ++r.iterations) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) {
      lo = hi = mid;
      f_lo = f_hi = 0.0;
      ++r.iterations;
      break;
    }
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  r.lo = lo;
  r.hi = hi;
  r.root = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  const double mid = lo + 0.5 * (hi - lo);
  if (mid > lo && mid < hi) {
    const double f_mid = f(mid);
    if (std::abs(f_mid) < std::abs(f(r.root))) r.root = mid;
  }
  return r;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 int max_depth) {
  if (!(b > a)) return 0.0;
  // Seed with a few panels so narrow features are not missed by the first estimate.
  constexpr int kPanels = 16;
  double total = 0.0;
  const double h = (b - a) / kPanels;
  for (int k = 0; k < kPanels; ++k) {
    const double x0 = a + k * h;
    const double x1 = k + 1 == kPanels ? b : a + (k + 1) * h;
    const double f0 = f(x0), f1 = f(x1), fm = f(0.5 * (x0 + x1));
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += simpson_step(f, x0, x1, f0, fm, f1, whole, tol / kPanels, max_depth);
  }
  return total;
}

double integrate_with_breaks(const std::function<double(double)>& f, double a, double b,
                             std::span<const double> breaks, double tol) {
  std::vector<double> pts{a};
  for (double x : breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    total += integrate(f, pts[k], pts[k + 1], tol / static_cast<double>(pts.size()));
  }
  return total;
}

}  // namespace bmlab
