#pragma once

#include <cmath>
#include <stdexcept>

namespace stopsim::num {

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm)) {
    throw std::runtime_error("integrate_adaptive: non-finite integrand value");
  }
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double refined = left + right;
  const double err = (refined - whole) / 15.0;
  if (std::abs(err) <= tol) return refined + err;
  if (depth <= 0) {
    throw std::runtime_error("integrate_adaptive: subdivision limit reached");
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with Richardson correction, absolute tolerance.
// Recursion capped at 60 halvings: intervals shrink to ~2^-60 of the span
// before giving up, enough for endpoint log-type kinks.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double tol, int max_depth = 60) {
  if (!(a <= b)) throw std::invalid_argument("integrate_adaptive: need a <= b");
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
    throw std::runtime_error("integrate_adaptive: non-finite integrand value");
  }
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace stopsim::num
