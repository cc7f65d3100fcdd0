#pragma once

#include <cmath>
#include <stdexcept>

namespace stopsim::num {

// Bisection on a bracketing interval. Returns the midpoint of the final
// interval, which has width <= tol and contains a sign change.
template <typename F>
double find_root_bisect(const F& f, double lo, double hi, double tol) {
  if (!(lo <= hi)) throw std::invalid_argument("find_root_bisect: need lo <= hi");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw std::invalid_argument("find_root_bisect: endpoints do not bracket a root");
  }
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval at floating-point resolution
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace stopsim::num
