#pragma once

#include <cmath>
#include <stdexcept>

namespace stopsim::num {

namespace detail {

inline constexpr double kInvE = 0.36787944117144232160;  // 1/e

// series around the branch point x = -1/e in p = sqrt(2(e*x+1));
// W0 takes +p, W-1 takes -p
inline double branch_point_series(double p) {
  const double p2 = p * p;
  const double p3 = p2 * p;
  const double p4 = p3 * p;
  return -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p3 - 43.0 / 540.0 * p4;
}

// Halley iteration on f(w) = w e^w - x. The guard keeps the iterate on the
// requested branch (w >= -1 for W0, w <= -1 for W-1).
inline double halley(double x, double w, bool principal) {
  for (int it = 0; it < 60; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double fp = ew * (1.0 + w);
    const double fpp = ew * (2.0 + w);
    const double denom = fp - f * fpp / (2.0 * fp);
    double step = f / denom;
    double next = w - step;
    if (principal) {
      if (next < -1.0) next = -1.0 + 0.5 * (w + 1.0);
    } else {
      if (next > -1.0) next = -1.0 + 0.5 * (w + 1.0);
    }
    const double moved = std::abs(next - w);
    w = next;
    if (moved <= 1e-16 * (1.0 + std::abs(w))) break;
  }
  return w;
}

}  // namespace detail

// Principal branch W0 on [-1/e, inf); W0(x) >= -1 and W0(x) e^{W0(x)} = x.
inline double lambert_w0(double x) {
  using detail::kInvE;
  if (x < -kInvE) {
    if (x > -kInvE - 1e-12) x = -kInvE;  // guard band for rounded inputs
    else throw std::domain_error("lambert_w0: x below -1/e");
  }
  if (x == 0.0) return 0.0;

  const double p2 = 2.0 * (std::exp(1.0) * x + 1.0);
  if (p2 <= 0.0) return -1.0;  // branch point
  double w;
  if (p2 < 0.04) {
    w = detail::branch_point_series(std::sqrt(p2));
  } else if (x < 1.0) {
    // Taylor-ish guess near 0, still fine down to x ~ -0.3
    w = x * (1.0 - x + 1.5 * x * x);
    if (w <= -1.0) w = -0.99;
  } else {
    const double lx = std::log(x);
    const double llx = std::log(lx > 1.0 ? lx : 1.0);
    w = lx - llx + (lx > 1.0 ? llx / lx : 0.0);
  }
  return detail::halley(x, w, true);
}

// Lower branch W-1 on [-1/e, 0); W-1(x) <= -1.
inline double lambert_w_minus1(double x) {
  using detail::kInvE;
  if (x < -kInvE) {
    if (x > -kInvE - 1e-12) x = -kInvE;
    else throw std::domain_error("lambert_w_minus1: x below -1/e");
  }
  if (x >= 0.0) throw std::domain_error("lambert_w_minus1: x must be negative");

  const double p2 = 2.0 * (std::exp(1.0) * x + 1.0);
  if (p2 <= 0.0) return -1.0;
  double w;
  if (p2 < 0.04) {
    w = detail::branch_point_series(-std::sqrt(p2));
  } else {
    // asymptotic guess; exact as x -> 0^-
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
    if (w > -1.0) w = -1.5;
  }
  return detail::halley(x, w, false);
}

}  // namespace stopsim::num
