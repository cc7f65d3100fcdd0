#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "stopsim/lambert_w.hpp"

namespace stopsim::num {

inline constexpr double kInvE = 0.36787944117144232160;

// Phase boundaries (tau1, tau2) solving tau * ln(1/tau) = gamma, with
// tau1 <= 1/e <= tau2. tau1 = e^{W-1(-gamma)}, tau2 = e^{W0(-gamma)};
// the endpoints gamma = 0 -> (0, 1) and gamma = 1/e -> (1/e, 1/e) are exact.
inline std::pair<double, double> tau_pair(double gamma) {
  if (gamma < 0.0 || gamma > kInvE + 1e-12) {
    throw std::domain_error("tau_pair: gamma outside [0, 1/e]");
  }
  if (gamma == 0.0) return {0.0, 1.0};
  if (gamma >= kInvE) return {kInvE, kInvE};
  double t1 = std::exp(lambert_w_minus1(-gamma));
  double t2 = std::exp(lambert_w0(-gamma));
  if (t1 > kInvE) t1 = kInvE;
  if (t2 < kInvE) t2 = kInvE;
  return {t1, t2};
}

}  // namespace stopsim::num
