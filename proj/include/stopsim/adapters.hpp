#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stopsim/distribution.hpp"
#include "stopsim/policy.hpp"

namespace stopsim::arrivals {

// --------------------------------------------------------------------------
// n-arrival rule from a Poisson rule: simulate Poisson(lambda) arrival times
// with lambda = n(1 - eps), eps = sqrt(ln n / n), and feed the real values in
// order at those times. Real values beyond the simulated count are never
// seen; a simulated stop beyond the n-th arrival cannot happen because the
// run ends with the n-th real value (it would be worth 0 either way).
// --------------------------------------------------------------------------

class NFromPoissonAdapter final : public policies::Policy {
  class Run final : public policies::PolicyRun {
   public:
    Run(std::vector<double> times, std::unique_ptr<policies::PolicyRun> inner)
        : times_(std::move(times)), inner_(std::move(inner)) {}
    policies::Decision step(double, double value) override {
      ensure_live();
      if (index_ >= times_.size()) return policies::Decision::reject;
      const double t = times_[index_++];
      if (inner_->step(t, value) == policies::Decision::accept) {
        mark_done();
        return policies::Decision::accept;
      }
      return policies::Decision::reject;
    }

   private:
    std::vector<double> times_;
    std::unique_ptr<policies::PolicyRun> inner_;
    std::size_t index_ = 0;
  };

 public:
  NFromPoissonAdapter(policies::PolicyPtr inner, std::size_t n) : inner_(std::move(inner)), n_(n) {
    if (n < 2) throw std::invalid_argument("n_from_poisson_adapter: need n >= 2");
    eps_ = std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
    lambda_ = static_cast<double>(n) * (1.0 - eps_);
  }

  std::unique_ptr<policies::PolicyRun> start(const policies::RunContext& ctx) const override {
    if (!ctx.rng) throw std::logic_error("n_from_poisson_adapter needs a random stream");
    std::vector<double> times;
    times.reserve(n_ + 8);
    double t = 0.0;
    for (;;) {
      t += ctx.rng->exponential(lambda_);
      if (t >= 1.0 || times.size() >= n_) break;
      times.push_back(t);
    }
    return std::make_unique<Run>(std::move(times), inner_->start(ctx));
  }
  std::string describe() const override {
    return "n_from_poisson(n=" + std::to_string(n_) + ",inner=" + inner_->describe() + ")";
  }
  double eps() const { return eps_; }
  double lambda() const { return lambda_; }

 private:
  policies::PolicyPtr inner_;
  std::size_t n_;
  double eps_ = 0.0, lambda_ = 0.0;
};

inline policies::PolicyPtr n_from_poisson_adapter(policies::PolicyPtr poisson_rule,
                                                  std::size_t n) {
  return std::make_shared<NFromPoissonAdapter>(std::move(poisson_rule), n);
}

// --------------------------------------------------------------------------
// Poisson rule at rate eps*n from an n-arrival rule: split [0,1] into n
// windows, hand the inner rule the first arrival of each window (0 for empty
// windows). Stopping on a real first arrival accepts it; stopping on a 0
// ends the run with reward 0. An inner rule that expects a known law should
// be built on pad_with_zeros(d, e^-eps), the law of those window values.
// --------------------------------------------------------------------------

inline dist::ValueDistribution window_padded_law(const dist::ValueDistribution& d, double eps) {
  return dist::pad_with_zeros(d, std::exp(-eps));
}

class PoissonFromNAdapter final : public policies::Policy {
  class Run final : public policies::PolicyRun {
   public:
    Run(std::size_t n, std::unique_ptr<policies::PolicyRun> inner)
        : n_(n), inner_(std::move(inner)) {}
    policies::Decision step(double t, double value) override {
      ensure_live();
      if (dead_) return policies::Decision::reject;
      std::size_t w = static_cast<std::size_t>(t * static_cast<double>(n_));
      if (w >= n_) w = n_ - 1;
      // close skipped empty windows with zero values
      while (next_ < w) {
        ++next_;
        if (inner_->step(static_cast<double>(next_) / static_cast<double>(n_), 0.0) ==
            policies::Decision::accept) {
          dead_ = true;  // stopped on nothing
          return policies::Decision::reject;
        }
      }
      if (w < next_) return policies::Decision::reject;  // window already consumed
      ++next_;
      if (inner_->step(static_cast<double>(next_) / static_cast<double>(n_), value) ==
          policies::Decision::accept) {
        mark_done();
        return policies::Decision::accept;
      }
      return policies::Decision::reject;
    }

   private:
    std::size_t n_;
    std::unique_ptr<policies::PolicyRun> inner_;
    std::size_t next_ = 0;  // windows consumed so far
    bool dead_ = false;
  };

 public:
  PoissonFromNAdapter(policies::PolicyPtr inner, double eps, std::size_t n)
      : inner_(std::move(inner)), eps_(eps), n_(n) {
    if (!(eps > 0.0) || eps > 1.0) throw std::domain_error("poisson_from_n_adapter: eps outside (0,1]");
    if (n < 1) throw std::invalid_argument("poisson_from_n_adapter: need n >= 1");
  }
  std::unique_ptr<policies::PolicyRun> start(const policies::RunContext& ctx) const override {
    return std::make_unique<Run>(n_, inner_->start(ctx));
  }
  std::string describe() const override {
    return "poisson_from_n(eps=" + std::to_string(eps_) + ",n=" + std::to_string(n_) +
           ",inner=" + inner_->describe() + ")";
  }
  double rate() const { return eps_ * static_cast<double>(n_); }

 private:
  policies::PolicyPtr inner_;
  double eps_;
  std::size_t n_;
};

inline policies::PolicyPtr poisson_from_n_adapter(policies::PolicyPtr n_rule, double eps,
                                                  std::size_t n) {
  return std::make_shared<PoissonFromNAdapter>(std::move(n_rule), eps, n);
}

}  // namespace stopsim::arrivals
