#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "stopsim/arrivals.hpp"
#include "stopsim/distribution.hpp"
#include "stopsim/policy.hpp"
#include "stopsim/tau_pair.hpp"

namespace stopsim::policies {

// --------------------------------------------------------------------------
// Secretary rule: observe until the cutoff, then take the first arrival
// strictly better than everything seen so far.
// --------------------------------------------------------------------------

class SecretaryPolicy final : public Policy {
  class Run final : public PolicyRun {
   public:
    explicit Run(double cutoff) : cutoff_(cutoff) {}
    Decision step(double t, double v) override {
      ensure_live();
      if (t >= cutoff_ && v > best_) {
        mark_done();
        return Decision::accept;
      }
      best_ = std::max(best_, v);
      return Decision::reject;
    }

   private:
    double cutoff_;
    double best_ = 0.0;
  };

 public:
  explicit SecretaryPolicy(double cutoff) : cutoff_(cutoff) {
    if (!(cutoff >= 0.0) || !(cutoff <= 1.0)) {
      throw std::domain_error("secretary: cutoff outside [0,1]");
    }
  }
  std::unique_ptr<PolicyRun> start(const RunContext&) const override {
    return std::make_unique<Run>(cutoff_);
  }
  std::string describe() const override { return "secretary(cutoff=" + std::to_string(cutoff_) + ")"; }
  double cutoff() const { return cutoff_; }

 private:
  double cutoff_;
};

inline PolicyPtr secretary_policy(double cutoff = num::kInvE) {
  return std::make_shared<SecretaryPolicy>(cutoff);
}

// --------------------------------------------------------------------------
// ThreePhase. Warmup simulates Poisson(rate) advice arrivals on [-z, 0) and
// keeps L, the ell-th largest (0 when fewer than ell arrive). Then
//   [0, tau1):     reject everything
//   [tau1, tau2):  accept the first arrival above max(L, warmup-free best)
//   [tau2, 1]:     accept the first arrival above every earlier real arrival
// --------------------------------------------------------------------------

struct ThreePhaseParams {
  double gamma;
  double z;
  std::size_t ell;
  double tau1;
  double tau2;
  double rate;
  dist::ValueDistribution advice;

  ThreePhaseParams(double gamma_, double z_, double rate_, dist::ValueDistribution advice_)
      : gamma(gamma_), z(z_), ell(0), tau1(0.0), tau2(1.0), rate(rate_),
        advice(std::move(advice_)) {
    if (z < 0.0) throw std::domain_error("threephase: z must be nonnegative");
    if (!(rate > 0.0)) throw std::domain_error("threephase: rate must be positive");
    ell = static_cast<std::size_t>(std::llround(z)) + 2;
    auto [t1, t2] = num::tau_pair(gamma);  // validates gamma's domain
    tau1 = t1;
    tau2 = t2;
  }
};

// Decision core with an injected threshold; the harness reuses it when it
// wants to observe the warmup sample itself.
class ThreePhaseRun final : public PolicyRun {
 public:
  ThreePhaseRun(double tau1, double tau2, double threshold)
      : tau1_(tau1), tau2_(tau2), threshold_(threshold) {}

  Decision step(double t, double v) override {
    ensure_live();
    if (t < tau1_) {
      best_p1_ = std::max(best_p1_, v);
      best_p12_ = std::max(best_p12_, v);
      return Decision::reject;
    }
    if (t < tau2_) {
      const bool take = v > std::max(threshold_, best_p1_);
      best_p12_ = std::max(best_p12_, v);
      if (take) {
        mark_done();
        return Decision::accept;
      }
      return Decision::reject;
    }
    if (v > best_p12_) {
      mark_done();
      return Decision::accept;
    }
    return Decision::reject;
  }

 private:
  double tau1_, tau2_, threshold_;
  double best_p1_ = 0.0;   // max real arrival in [0, tau1)
  double best_p12_ = 0.0;  // max real arrival in [0, tau2)
};

// L from the warmup: ell-th largest of Poisson(rate * z) draws from advice.
inline double sample_warmup_threshold(const dist::ValueDistribution& advice, double rate,
                                      double z, std::size_t ell, RngStream& rng) {
  const auto top = arrivals::sample_top_values(advice, rate, z, ell, rng);
  return top.size() >= ell ? top[ell - 1] : 0.0;
}

class ThreePhasePolicy final : public Policy {
 public:
  explicit ThreePhasePolicy(ThreePhaseParams params) : params_(std::move(params)) {}

  std::unique_ptr<PolicyRun> start(const RunContext& ctx) const override {
    if (!ctx.rng) throw std::logic_error("threephase needs a random stream");
    const double L = sample_warmup_threshold(params_.advice, params_.rate, params_.z,
                                             params_.ell, *ctx.rng);
    return std::make_unique<ThreePhaseRun>(params_.tau1, params_.tau2, L);
  }
  std::string describe() const override {
    return "threephase(gamma=" + std::to_string(params_.gamma) +
           ",z=" + std::to_string(params_.z) + ")";
  }
  const ThreePhaseParams& params() const { return params_; }

 private:
  ThreePhaseParams params_;
};

inline PolicyPtr three_phase_policy(ThreePhaseParams params) {
  return std::make_shared<ThreePhasePolicy>(std::move(params));
}

inline PolicyPtr three_phase_policy(double gamma, double z, double rate,
                                    dist::ValueDistribution advice) {
  return three_phase_policy(ThreePhaseParams(gamma, z, rate, std::move(advice)));
}

// tau1 = 0, tau2 = 1: the static quantile-threshold rule.
inline PolicyPtr fixed_quantile_threshold_policy(dist::ValueDistribution advice, double rate,
                                                 double z) {
  return three_phase_policy(ThreePhaseParams(0.0, z, rate, std::move(advice)));
}

// --------------------------------------------------------------------------
// n-arrival variant for the reduction experiments: phase windows by arrival
// index with r1 = ceil(n tau1), r2 = ceil(n tau2); warmup is z*n advice draws.
// --------------------------------------------------------------------------

class ThreePhaseNPolicy final : public Policy {
  class Run final : public PolicyRun {
   public:
    Run(std::size_t r1, std::size_t r2, double threshold)
        : r1_(r1), r2_(r2), threshold_(threshold) {}
    Decision step(double, double v) override {
      ensure_live();
      ++index_;
      if (index_ < r1_) {
        best_p1_ = std::max(best_p1_, v);
        best_p12_ = std::max(best_p12_, v);
        return Decision::reject;
      }
      if (index_ < r2_) {
        const bool take = v > std::max(threshold_, best_p1_);
        best_p12_ = std::max(best_p12_, v);
        if (take) {
          mark_done();
          return Decision::accept;
        }
        return Decision::reject;
      }
      if (v > best_p12_) {
        mark_done();
        return Decision::accept;
      }
      return Decision::reject;
    }

   private:
    std::size_t r1_, r2_, index_ = 0;
    double threshold_;
    double best_p1_ = 0.0, best_p12_ = 0.0;
  };

 public:
  ThreePhaseNPolicy(double gamma, double z, std::size_t n, dist::ValueDistribution advice)
      : z_(z), n_(n), advice_(std::move(advice)) {
    if (z < 0.0 || n < 1) throw std::domain_error("threephase_n: bad z or n");
    auto [t1, t2] = num::tau_pair(gamma);
    gamma_ = gamma;
    r1_ = static_cast<std::size_t>(std::ceil(t1 * static_cast<double>(n)));
    r2_ = static_cast<std::size_t>(std::ceil(t2 * static_cast<double>(n)));
    ell_ = static_cast<std::size_t>(std::llround(z)) + 2;
  }

  std::unique_ptr<PolicyRun> start(const RunContext& ctx) const override {
    if (!ctx.rng) throw std::logic_error("threephase_n needs a random stream");
    const std::uint64_t k =
        static_cast<std::uint64_t>(std::llround(z_ * static_cast<double>(n_)));
    auto top = arrivals::top_uniform_order_stats(k, ell_, *ctx.rng);
    double L = 0.0;
    if (top.size() >= ell_) L = advice_.quantile(top[ell_ - 1]);
    return std::make_unique<Run>(r1_, r2_, L);
  }
  std::string describe() const override {
    return "threephase_n(gamma=" + std::to_string(gamma_) + ",z=" + std::to_string(z_) +
           ",n=" + std::to_string(n_) + ")";
  }

 private:
  double gamma_ = 0.0, z_;
  std::size_t n_, r1_ = 0, r2_ = 0, ell_ = 2;
  dist::ValueDistribution advice_;
};

inline PolicyPtr three_phase_n_policy(double gamma, double z, std::size_t n,
                                      dist::ValueDistribution advice) {
  return std::make_shared<ThreePhaseNPolicy>(gamma, z, n, std::move(advice));
}

}  // namespace stopsim::policies
