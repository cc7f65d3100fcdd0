#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopsim/function_grid.hpp"

namespace stopsim::num {

// Classical fixed-step fourth-order path for an N-dimensional system.
// Returns all steps+1 states; throws with the failing t on overflow/NaN.
template <std::size_t N, typename F>
std::vector<std::array<double, N>> rk4_path(const F& f, std::array<double, N> y0, double t0,
                                            double t1, std::size_t steps) {
  if (steps < 16) throw std::invalid_argument("rk4_path: need at least 16 steps");
  if (!(t0 < t1)) throw std::invalid_argument("rk4_path: need t0 < t1");
  const double h = (t1 - t0) / static_cast<double>(steps);
  std::vector<std::array<double, N>> out;
  out.reserve(steps + 1);
  out.push_back(y0);
  std::array<double, N> y = y0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    std::array<double, N> k1 = f(t, y);
    std::array<double, N> ytmp;
    for (std::size_t j = 0; j < N; ++j) ytmp[j] = y[j] + 0.5 * h * k1[j];
    std::array<double, N> k2 = f(t + 0.5 * h, ytmp);
    for (std::size_t j = 0; j < N; ++j) ytmp[j] = y[j] + 0.5 * h * k2[j];
    std::array<double, N> k3 = f(t + 0.5 * h, ytmp);
    for (std::size_t j = 0; j < N; ++j) ytmp[j] = y[j] + h * k3[j];
    std::array<double, N> k4 = f(t + h, ytmp);
    bool ok = true;
    for (std::size_t j = 0; j < N; ++j) {
      y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      ok = ok && std::isfinite(y[j]);
    }
    if (!ok) {
      throw std::runtime_error("rk4_path: non-finite state at t = " + std::to_string(t + h));
    }
    out.push_back(y);
  }
  return out;
}

// Scalar initial-value solve; grid covers [t0, t1] with steps+1 nodes.
template <typename F>
FunctionGrid solve_ivp(const F& f, double y0, double t0, double t1, std::size_t steps) {
  auto sys = [&f](double t, const std::array<double, 1>& y) -> std::array<double, 1> {
    return {f(t, y[0])};
  };
  const auto path = rk4_path<1>(sys, {y0}, t0, t1, steps);
  std::vector<double> nodes(steps + 1), values(steps + 1);
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (std::size_t i = 0; i <= steps; ++i) {
    nodes[i] = (i == steps) ? t1 : t0 + h * static_cast<double>(i);
    values[i] = path[i][0];
  }
  return FunctionGrid(std::move(nodes), std::move(values));
}

}  // namespace stopsim::num
