#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stopsim/distribution.hpp"
#include "stopsim/function_grid.hpp"
#include "stopsim/ode.hpp"
#include "stopsim/policy.hpp"

namespace stopsim::policies {

// Acceptance curve of the optimal Poisson policy: r solves
//   r'(t) = -rate * integral_{r(t)}^inf (1 - CDF(x)) dx,   r(1) = 0,
// and r(0) is the policy's expected reward from a standing start.
struct OptimalPolicyCurve {
  num::FunctionGrid r;
};

namespace detail {

inline num::FunctionGrid solve_reward_curve(const dist::ValueDistribution& d, double rate,
                                            std::size_t steps) {
  // integrate in s = 1 - t so the terminal condition becomes an initial one
  auto sys = [&d, rate](double, const std::array<double, 1>& s) -> std::array<double, 1> {
    return {rate * d.tail_integral(s[0])};
  };
  const auto path = num::rk4_path<1>(sys, {0.0}, 0.0, 1.0, steps);
  const double h = 1.0 / static_cast<double>(steps);
  std::vector<double> t(steps + 1), r(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    t[i] = (i == steps) ? 1.0 : h * static_cast<double>(i);
    r[i] = path[steps - i][0];
  }
  return num::FunctionGrid(std::move(t), std::move(r));
}

}  // namespace detail

class ThresholdCurvePolicy final : public Policy {
  class Run final : public PolicyRun {
   public:
    explicit Run(const num::FunctionGrid* r) : r_(r) {}
    Decision step(double t, double v) override {
      ensure_live();
      if (v > r_->eval(std::clamp(t, r_->front_node(), r_->back_node()))) {
        mark_done();
        return Decision::accept;
      }
      return Decision::reject;
    }

   private:
    const num::FunctionGrid* r_;
  };

 public:
  ThresholdCurvePolicy(num::FunctionGrid r, std::string label)
      : r_(std::move(r)), label_(std::move(label)) {}
  std::unique_ptr<PolicyRun> start(const RunContext&) const override {
    return std::make_unique<Run>(&r_);
  }
  std::string describe() const override { return label_; }
  const num::FunctionGrid& curve() const { return r_; }

 private:
  num::FunctionGrid r_;
  std::string label_;
};

inline std::pair<PolicyPtr, OptimalPolicyCurve> optimal_poisson_policy(
    const dist::ValueDistribution& d, double rate, std::size_t steps = 4096) {
  if (!(rate > 0.0)) throw std::invalid_argument("optimal_poisson_policy: rate must be positive");
  dist::detail::check_tail_integrable(d, rate);
  auto grid = detail::solve_reward_curve(d, rate, steps);
  OptimalPolicyCurve curve{grid};
  auto pol = std::make_shared<ThresholdCurvePolicy>(std::move(grid), "optimal()");
  return {pol, std::move(curve)};
}

// Exact n-arrival oracle by backward induction: V_0 = 0 and
// V_k = E[max(X, V_{k-1})] = V_{k-1} + tail(V_{k-1}); accept X_i iff
// X_i > V_{n-i}.
class DpPolicy final : public Policy {
  class Run final : public PolicyRun {
   public:
    explicit Run(const std::vector<double>* v) : v_(v) {}
    Decision step(double, double value) override {
      ensure_live();
      ++index_;
      const std::size_t n = v_->size() - 1;
      const double threshold = index_ <= n ? (*v_)[n - index_] : 0.0;
      if (value > threshold) {
        mark_done();
        return Decision::accept;
      }
      return Decision::reject;
    }

   private:
    const std::vector<double>* v_;
    std::size_t index_ = 0;
  };

 public:
  DpPolicy(std::vector<double> values, std::size_t n) : v_(std::move(values)), n_(n) {}
  std::unique_ptr<PolicyRun> start(const RunContext&) const override {
    return std::make_unique<Run>(&v_);
  }
  std::string describe() const override { return "dp(n=" + std::to_string(n_) + ")"; }
  const std::vector<double>& values() const { return v_; }

 private:
  std::vector<double> v_;  // V_0 .. V_n
  std::size_t n_;
};

inline std::pair<PolicyPtr, std::vector<double>> dp_optimal_n_policy(
    const dist::ValueDistribution& d, std::size_t n) {
  if (n < 1) throw std::invalid_argument("dp_optimal_n_policy: need n >= 1");
  dist::detail::check_tail_integrable(d, static_cast<double>(n));
  std::vector<double> v(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) v[k] = v[k - 1] + d.tail_integral(v[k - 1]);
  std::vector<double> out(v.begin() + 1, v.end());  // V_1 .. V_n
  auto pol = std::make_shared<DpPolicy>(std::move(v), n);
  return {pol, std::move(out)};
}

}  // namespace stopsim::policies
