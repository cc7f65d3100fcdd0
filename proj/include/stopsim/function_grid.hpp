#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stopsim::num {

enum class Monotonicity { none, increasing, decreasing };

// Sampled function on strictly increasing nodes with shape-preserving
// (Fritsch-Carlson) piecewise-cubic interpolation. When the values are
// strictly monotone the interpolant is too, so inverse() is well-defined
// on the value range.
class FunctionGrid {
 public:
  FunctionGrid(std::vector<double> nodes, std::vector<double> values,
               Monotonicity mono = Monotonicity::none)
      : t_(std::move(nodes)), v_(std::move(values)), mono_(mono) {
    if (t_.size() < 2 || t_.size() != v_.size()) {
      throw std::invalid_argument("FunctionGrid: need >= 2 nodes with matching values");
    }
    for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
      if (!(t_[i] < t_[i + 1])) {
        throw std::invalid_argument("FunctionGrid: nodes must be strictly increasing");
      }
    }
    if (mono_ == Monotonicity::none) mono_ = detect_monotonicity();
    else check_monotonicity(mono_);
    build_slopes();
  }

  double front_node() const { return t_.front(); }
  double back_node() const { return t_.back(); }
  double front_value() const { return v_.front(); }
  double back_value() const { return v_.back(); }
  std::size_t size() const { return t_.size(); }
  const std::vector<double>& nodes() const { return t_; }
  const std::vector<double>& values() const { return v_; }
  Monotonicity monotonicity() const { return mono_; }

  double eval(double t) const {
    const std::size_t i = segment(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * v_[i] + h10 * h * d_[i] + h01 * v_[i + 1] + h11 * h * d_[i + 1];
  }

  double deriv(double t) const {
    const std::size_t i = segment(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s;
    const double g00 = (6.0 * s2 - 6.0 * s) / h;
    const double g10 = 3.0 * s2 - 4.0 * s + 1.0;
    const double g01 = (-6.0 * s2 + 6.0 * s) / h;
    const double g11 = 3.0 * s2 - 2.0 * s;
    return g00 * v_[i] + g10 * d_[i] + g01 * v_[i + 1] + g11 * d_[i + 1];
  }

  // Solves eval(t) = v on a monotone grid. Inputs a hair outside the value
  // range (1e-9 relative) are clamped to the nearest endpoint.
  double inverse(double v) const {
    if (mono_ == Monotonicity::none) {
      throw std::logic_error("FunctionGrid::inverse: grid is not monotone");
    }
    const bool inc = mono_ == Monotonicity::increasing;
    const double vlo = inc ? v_.front() : v_.back();
    const double vhi = inc ? v_.back() : v_.front();
    const double guard = 1e-9 * (1.0 + std::abs(vlo) + std::abs(vhi));
    if (v < vlo || v > vhi) {
      if (v >= vlo - guard && v <= vhi + guard) {
        v = std::clamp(v, vlo, vhi);
      } else {
        throw std::domain_error("FunctionGrid::inverse: value outside range");
      }
    }
    // locate the bracketing segment by binary search on node values
    std::size_t lo = 0, hi = t_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool left = inc ? (v_[mid] >= v) : (v_[mid] <= v);
      if (left) hi = mid;
      else lo = mid;
    }
    // Newton within the segment, bisection fallback
    double a = t_[lo], b = t_[hi];
    double t = 0.5 * (a + b);
    for (int it = 0; it < 100; ++it) {
      const double f = eval(t) - v;
      if ((f > 0.0) == inc) b = t;
      else a = t;
      const double df = deriv(t);
      double next = (df != 0.0) ? t - f / df : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - t) <= 1e-15 * (1.0 + std::abs(t))) { t = next; break; }
      t = next;
    }
    return t;
  }

 private:
  std::size_t segment(double t) const {
    const double guard = 1e-12 * (1.0 + std::abs(t_.front()) + std::abs(t_.back()));
    if (t < t_.front() || t > t_.back()) {
      if (t >= t_.front() - guard && t <= t_.back() + guard) {
        t = std::clamp(t, t_.front(), t_.back());
      } else {
        throw std::domain_error("FunctionGrid::eval: argument outside [" +
                                std::to_string(t_.front()) + ", " + std::to_string(t_.back()) +
                                "]");
      }
    }
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - t_.begin());
    if (i == 0) i = 1;
    if (i >= t_.size()) i = t_.size() - 1;
    return i - 1;
  }

  Monotonicity detect_monotonicity() const {
    bool inc = true, dec = true;
    for (std::size_t i = 0; i + 1 < v_.size(); ++i) {
      if (!(v_[i] < v_[i + 1])) inc = false;
      if (!(v_[i] > v_[i + 1])) dec = false;
    }
    if (inc) return Monotonicity::increasing;
    if (dec) return Monotonicity::decreasing;
    return Monotonicity::none;
  }

  void check_monotonicity(Monotonicity m) const {
    for (std::size_t i = 0; i + 1 < v_.size(); ++i) {
      if (m == Monotonicity::increasing && !(v_[i] < v_[i + 1])) {
        throw std::invalid_argument("FunctionGrid: values not strictly increasing");
      }
      if (m == Monotonicity::decreasing && !(v_[i] > v_[i + 1])) {
        throw std::invalid_argument("FunctionGrid: values not strictly decreasing");
      }
    }
  }

  // Fritsch-Carlson slopes: monotone data yields a monotone interpolant.
  void build_slopes() {
    const std::size_t n = t_.size();
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = t_[i + 1] - t_[i];
      delta[i] = (v_[i + 1] - v_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] == 0.0 || delta[i] == 0.0 ||
          (delta[i - 1] > 0.0) != (delta[i] > 0.0)) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    d_[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  static double edge_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d == 0.0 || (d > 0.0) != (d0 > 0.0)) d = 0.0;
    else if ((d0 > 0.0) != (d1 > 0.0) && std::abs(d) > 3.0 * std::abs(d0)) d = 3.0 * d0;
    return d;
  }

  std::vector<double> t_, v_, d_;
  Monotonicity mono_;
};

}  // namespace stopsim::num
