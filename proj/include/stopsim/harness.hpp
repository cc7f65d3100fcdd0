#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "stopsim/adapters.hpp"
#include "stopsim/arrivals.hpp"
#include "stopsim/distribution.hpp"
#include "stopsim/kertz.hpp"
#include "stopsim/optimal_policy.hpp"
#include "stopsim/policy.hpp"
#include "stopsim/three_phase.hpp"

namespace stopsim::harness {

// --------------------------------------------------------------------------
// Deterministic parallel trial runner. Trials are keyed by (seed, trial
// index); work is split into fixed chunks whose partial sums are combined in
// chunk order, so the report is bit-identical for any worker count.
// --------------------------------------------------------------------------

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  void merge(const Kahan& o) {
    add(o.sum);
    add(-o.carry);
  }
  double value() const { return sum; }
};

inline constexpr std::uint64_t kChunkSize = 4096;

template <typename ChunkResult, typename PerChunk>
std::vector<ChunkResult> run_chunked(std::uint64_t trials, std::size_t threads,
                                     PerChunk per_chunk) {
  const std::uint64_t chunks = (trials + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkResult> results(chunks);
  if (threads <= 1 || chunks <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) {
      results[c] = per_chunk(c * kChunkSize, std::min(trials, (c + 1) * kChunkSize));
    }
    return results;
  }
  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      results[c] = per_chunk(c * kChunkSize, std::min(trials, (c + 1) * kChunkSize));
    }
  };
  std::vector<std::thread> pool;
  const std::size_t nw = std::min<std::size_t>(threads, chunks);
  pool.reserve(nw);
  for (std::size_t i = 0; i < nw; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

// --------------------------------------------------------------------------
// Paired competitive-ratio estimation: ratio of means E[ALG]/E[MAX] with a
// delta-method standard error, plus the fraction of trials where the policy
// stopped on the realized maximum.
// --------------------------------------------------------------------------

struct Model {
  arrivals::ArrivalModel kind = arrivals::ArrivalModel::poisson;
  double rate = 0.0;     // poisson
  std::size_t n = 0;     // fixed_n

  static Model poisson(double rate) { return {arrivals::ArrivalModel::poisson, rate, 0}; }
  static Model fixed(std::size_t n) { return {arrivals::ArrivalModel::fixed_n, 0.0, n}; }
};

struct RatioEstimate {
  double alg_mean = 0.0;
  double max_mean = 0.0;
  double ratio = 0.0;
  double std_err = 0.0;
  double match_prob = 0.0;
  double match_std_err = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
};

namespace detail {

struct MomentSums {
  Kahan a, m, aa, mm, am;
  std::uint64_t matches = 0;
  std::uint64_t count = 0;
};

}  // namespace detail

inline RatioEstimate estimate_ratio(const policies::Policy& policy,
                                    const dist::ValueDistribution& d, const Model& model,
                                    std::uint64_t trials, std::uint64_t seed,
                                    std::size_t threads = 1) {
  if (trials < 100) throw std::invalid_argument("estimate_ratio: need at least 100 trials");
  auto per_chunk = [&](std::uint64_t beg, std::uint64_t end) {
    detail::MomentSums s;
    for (std::uint64_t trial = beg; trial < end; ++trial) {
      RngStream sg(seed, 2 * trial);
      RngStream pg(seed, 2 * trial + 1);
      const auto seq = model.kind == arrivals::ArrivalModel::poisson
                           ? arrivals::sample_poisson(d, model.rate, 0.0, 1.0, sg)
                           : arrivals::sample_fixed_n(d, model.n, sg);
      const double mx = seq.max_value();
      const double reward = policies::run_policy_reward(policy, seq, pg);
      s.a.add(reward);
      s.m.add(mx);
      s.aa.add(reward * reward);
      s.mm.add(mx * mx);
      s.am.add(reward * mx);
      if (reward > 0.0 && reward == mx) ++s.matches;
      ++s.count;
    }
    return s;
  };
  const auto parts = run_chunked<detail::MomentSums>(trials, threads, per_chunk);
  detail::MomentSums tot;
  for (const auto& p : parts) {
    tot.a.merge(p.a);
    tot.m.merge(p.m);
    tot.aa.merge(p.aa);
    tot.mm.merge(p.mm);
    tot.am.merge(p.am);
    tot.matches += p.matches;
    tot.count += p.count;
  }
  const double t = static_cast<double>(tot.count);
  RatioEstimate out;
  out.trials = tot.count;
  out.seed = seed;
  out.alg_mean = tot.a.value() / t;
  out.max_mean = tot.m.value() / t;
  if (!(out.max_mean > 0.0)) throw std::runtime_error("estimate_ratio: E[MAX] is zero");
  out.ratio = out.alg_mean / out.max_mean;
  // Var(a - R m) collapses the paired fluctuations the ratio cancels
  const double var_d = std::max(
      0.0, (tot.aa.value() - 2.0 * out.ratio * tot.am.value() +
            out.ratio * out.ratio * tot.mm.value()) /
                   t -
               (out.alg_mean - out.ratio * out.max_mean) * (out.alg_mean - out.ratio * out.max_mean));
  out.std_err = std::sqrt(var_d / t) / out.max_mean;
  out.match_prob = static_cast<double>(tot.matches) / t;
  out.match_std_err = std::sqrt(std::max(0.0, out.match_prob * (1.0 - out.match_prob) / t));
  return out;
}

// --------------------------------------------------------------------------
// Adversarial advice suite: advice far below the true support, far above it,
// a near-zero padded copy (total-variation distance c/rate from the zero
// law), and the rate-boosted tail variant when d is the adversarial
// instance.
// --------------------------------------------------------------------------

struct SuiteMember {
  std::string name;
  dist::ValueDistribution advice;
};

inline std::vector<SuiteMember> adversary_suite(const dist::ValueDistribution& d, double rate,
                                                double c = 2.0) {
  if (!(rate > 0.0)) throw std::invalid_argument("adversary_suite: rate must be positive");
  std::vector<SuiteMember> out;
  out.push_back({"too_low", dist::make_uniform(0.0, 1e-3)});
  const double hi = 1000.0 * std::max(1.0, d.quantile(1.0 - 1e-6));
  out.push_back({"too_high", dist::make_uniform(hi, hi + 1.0)});
  const double keep = std::min(c / rate, 0.5);
  out.push_back({"near_zero_pad", dist::pad_with_zeros(d, 1.0 - keep)});
  if (auto hs = kertz::hard_state_of(d)) {
    // boost choice ln(1/delta)/((1-delta) lambda' eps) at delta = 1/2,
    // eps = 1/8, capped so the scaled tail keeps total mass below one.
    const double b = 0.5 * (hs->r.front_value() + hs->r.eval(0.125));
    const double lambda_prime = hs->n * (1.0 - d.cdf(b));
    double boost = 16.0 * std::log(2.0) / lambda_prime;
    const double tail_mass = 1.0 - d.cdf(b);
    boost = std::clamp(boost, 1.0, 0.5 / tail_mass);
    const kertz::HardInstance inst(hs);
    out.push_back({"boosted_tail",
                   dist::boosted_adversary(inst, b, boost, 0.1, 50.0 * inst.big_h())});
  }
  return out;
}

struct RobustnessReport {
  RatioEstimate consistency;
  RatioEstimate robustness;  // member with the smallest ratio
  std::string worst_member;
  std::vector<std::pair<std::string, RatioEstimate>> members;
};

inline RobustnessReport consistency_robustness(double gamma, double z,
                                               const dist::ValueDistribution& d, double rate,
                                               std::uint64_t trials, std::uint64_t seed,
                                               std::size_t threads = 1) {
  RobustnessReport rep;
  const auto model = Model::poisson(rate);
  rep.consistency = estimate_ratio(*policies::three_phase_policy(gamma, z, rate, d), d, model,
                                   trials, seed, threads);
  bool first = true;
  for (const auto& member : adversary_suite(d, rate)) {
    auto pol = policies::three_phase_policy(gamma, z, rate, member.advice);
    auto est = estimate_ratio(*pol, d, model, trials, seed, threads);
    if (first || est.ratio < rep.robustness.ratio) {
      rep.robustness = est;
      rep.worst_member = member.name;
      first = false;
    }
    rep.members.emplace_back(member.name, est);
  }
  return rep;
}

// --------------------------------------------------------------------------
// Frontier points.
// --------------------------------------------------------------------------

enum class FrontierSource { theory, empirical, interpolated };

struct FrontierPoint {
  double gamma = 0.0;
  double tau1 = 0.0;
  double tau2 = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_stderr = 0.0;
  double beta_stderr = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  FrontierSource source = FrontierSource::theory;
};

inline double theory_alpha(double gamma) {
  auto [t1, t2] = num::tau_pair(gamma);
  return gamma + std::exp(-t1) - std::exp(-t2);
}

inline FrontierPoint frontier_theoretical(double gamma) {
  auto [t1, t2] = num::tau_pair(gamma);
  FrontierPoint p;
  p.gamma = gamma;
  p.tau1 = t1;
  p.tau2 = t2;
  p.alpha = gamma + std::exp(-t1) - std::exp(-t2);
  p.beta = gamma;
  p.source = FrontierSource::theory;
  return p;
}

// Where the chord from (0, beta0) touches the guarantee curve; mixing with
// the distribution-optimal rule dominates the curve left of this point.
inline double frontier_tangency_gamma() {
  const double b0 = kertz::beta_limit();
  auto gap = [b0](double g) {
    const double h = 1e-7;
    const double da = (theory_alpha(g + h) - theory_alpha(g - h)) / (2.0 * h);
    return theory_alpha(g) - b0 - g * da;
  };
  return num::find_root_bisect(gap, 0.05, 0.33, 1e-10);
}

inline std::vector<FrontierPoint> frontier_theory_sweep(const std::vector<double>& gamma_grid) {
  std::vector<FrontierPoint> out;
  const double b0 = kertz::beta_limit();
  const double gstar = frontier_tangency_gamma();
  const double astar = theory_alpha(gstar);
  auto interpolated_at = [&](double beta) {
    FrontierPoint p = frontier_theoretical(gstar);
    p.alpha = b0 + beta * (astar - b0) / gstar;
    p.beta = beta;
    p.source = FrontierSource::interpolated;
    return p;
  };
  for (double g : gamma_grid) {
    out.push_back(frontier_theoretical(g));
    if (g < gstar) out.push_back(interpolated_at(g));
  }
  out.push_back(interpolated_at(0.0));
  out.push_back(interpolated_at(gstar));
  std::sort(out.begin(), out.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
    if (a.beta != b.beta) return a.beta < b.beta;
    return static_cast<int>(a.source) < static_cast<int>(b.source);
  });
  return out;
}

inline std::vector<FrontierPoint> frontier_empirical_sweep(const std::vector<double>& gamma_grid,
                                                           double z,
                                                           const dist::ValueDistribution& d,
                                                           double rate, std::uint64_t trials,
                                                           std::uint64_t seed,
                                                           std::size_t threads = 1) {
  std::vector<FrontierPoint> out;
  for (double g : gamma_grid) {
    const auto rep = consistency_robustness(g, z, d, rate, trials, seed, threads);
    FrontierPoint p = frontier_theoretical(g);
    p.alpha = rep.consistency.ratio;
    p.alpha_stderr = rep.consistency.std_err;
    p.beta = rep.robustness.ratio;
    p.beta_stderr = rep.robustness.std_err;
    p.trials = trials;
    p.seed = seed;
    p.source = FrontierSource::empirical;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(),
            [](const FrontierPoint& a, const FrontierPoint& b) { return a.beta < b.beta; });
  return out;
}

// --------------------------------------------------------------------------
// Rank-dominance profile: with accurate advice, how often the rule's pick
// and the realized maximum land in the top l' of all arrivals, simulated
// warmup included.
// --------------------------------------------------------------------------

struct DominancePoint {
  std::size_t lprime;
  double p_alg;
  double p_max;
};

inline std::vector<DominancePoint> dominance_profile(double gamma, double z,
                                                     const dist::ValueDistribution& d,
                                                     double rate, std::uint64_t trials,
                                                     std::size_t lprime_max, std::uint64_t seed,
                                                     std::size_t threads = 1) {
  const auto [tau1, tau2] = num::tau_pair(gamma);
  const std::size_t ell = static_cast<std::size_t>(std::llround(z)) + 2;
  if (lprime_max < 1 || lprime_max > ell) {
    throw std::invalid_argument("dominance_profile: need 1 <= lprime_max <= ell");
  }
  struct Hits {
    std::vector<std::uint64_t> alg, mx;
    std::uint64_t count = 0;
  };
  auto per_chunk = [&](std::uint64_t beg, std::uint64_t end) {
    Hits h;
    h.alg.assign(lprime_max, 0);
    h.mx.assign(lprime_max, 0);
    std::vector<double> pool;
    for (std::uint64_t trial = beg; trial < end; ++trial) {
      RngStream sg(seed, 2 * trial);
      RngStream pg(seed, 2 * trial + 1);
      const auto seq = arrivals::sample_poisson(d, rate, 0.0, 1.0, sg);
      const auto warm_top = arrivals::sample_top_values(d, rate, z, ell, pg);
      const double threshold = warm_top.size() >= ell ? warm_top[ell - 1] : 0.0;
      policies::ThreePhaseRun run(tau1, tau2, threshold);
      double alg = 0.0;
      for (const auto& e : seq.entries) {
        if (run.step(e.time, e.value) == policies::Decision::accept) {
          alg = e.value;
          break;
        }
      }
      const double mx = seq.max_value();
      pool.clear();
      pool.insert(pool.end(), warm_top.begin(), warm_top.end());
      for (const auto& e : seq.entries) pool.push_back(e.value);
      std::sort(pool.begin(), pool.end(), std::greater<double>());
      for (std::size_t j = 0; j < lprime_max; ++j) {
        const double xj = j < pool.size() ? pool[j] : 0.0;
        if (alg > 0.0 && alg >= xj) ++h.alg[j];
        if (mx > 0.0 && mx >= xj) ++h.mx[j];
      }
      ++h.count;
    }
    return h;
  };
  const auto parts = run_chunked<Hits>(trials, threads, per_chunk);
  std::vector<std::uint64_t> alg(lprime_max, 0), mx(lprime_max, 0);
  std::uint64_t count = 0;
  for (const auto& p : parts) {
    for (std::size_t j = 0; j < lprime_max; ++j) {
      alg[j] += p.alg[j];
      mx[j] += p.mx[j];
    }
    count += p.count;
  }
  std::vector<DominancePoint> out;
  out.reserve(lprime_max);
  for (std::size_t j = 0; j < lprime_max; ++j) {
    out.push_back({j + 1, static_cast<double>(alg[j]) / static_cast<double>(count),
                   static_cast<double>(mx[j]) / static_cast<double>(count)});
  }
  return out;
}

// --------------------------------------------------------------------------
// Experiments.
// --------------------------------------------------------------------------

struct HardInstanceReport {
  double n = 0.0;
  double q = 0.0;
  double beta_n = 0.0;
  double beta0 = 0.0;
  kertz::OptMax analytic;
  RatioEstimate mc;
  double curve_max_dev = 0.0;  // |r - r*| on [q, 1]
};

inline HardInstanceReport hard_instance_experiment(double n, double q, std::uint64_t trials,
                                                   std::uint64_t seed, std::size_t threads = 1,
                                                   std::size_t steps = kertz::kDefaultOdeSteps) {
  const auto inst = kertz::build_hard_instance(n, q, steps);
  const auto d = inst.distribution();
  HardInstanceReport rep;
  rep.n = n;
  rep.q = q;
  rep.beta_n = inst.beta();
  rep.beta0 = kertz::beta_limit();
  rep.analytic = kertz::analytic_opt_and_max(inst);
  auto [pol, curve] = policies::optimal_poisson_policy(d, n);
  double dev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = q + (1.0 - q) * i / 200.0;
    dev = std::max(dev, std::abs(curve.r.eval(t) - inst.r_star().eval(t)));
  }
  rep.curve_max_dev = dev;
  rep.mc = estimate_ratio(*pol, d, Model::poisson(n), trials, seed, threads);
  return rep;
}

struct SmoothnessReport {
  double rate = 0.0;
  double c = 0.0;
  double tv_distance = 0.0;  // to the all-zeros advice
  std::vector<std::pair<std::string, RatioEstimate>> rows;
};

// Zero-padded heavy-tail law with useless (identically zero) advice: the
// advice-free fallback keeps ~1/e while nothing advice-driven can use D'.
inline SmoothnessReport smoothness_demo(double rate, double c, std::uint64_t trials,
                                        std::uint64_t seed, std::size_t threads = 1) {
  if (!(c > 0.0) || c > rate) throw std::invalid_argument("smoothness_demo: need 0 < c <= rate");
  SmoothnessReport rep;
  rep.rate = rate;
  rep.c = c;
  rep.tv_distance = c / rate;
  const auto base = dist::make_pareto(1.1, 1.0, 1e6);
  const auto d = dist::pad_with_zeros(base, 1.0 - c / rate);
  const auto zero_advice = dist::make_point(0.0);
  const auto model = Model::poisson(rate);
  const double z = 50.0;
  rep.rows.emplace_back("secretary",
                        estimate_ratio(*policies::secretary_policy(), d, model, trials, seed,
                                       threads));
  rep.rows.emplace_back(
      "threephase_gamma_1e",
      estimate_ratio(*policies::three_phase_policy(num::kInvE, z, rate, zero_advice), d, model,
                     trials, seed, threads));
  rep.rows.emplace_back(
      "threephase_gamma_025",
      estimate_ratio(*policies::three_phase_policy(0.25, z, rate, zero_advice), d, model, trials,
                     seed, threads));
  rep.rows.emplace_back(
      "fixedthreshold",
      estimate_ratio(*policies::fixed_quantile_threshold_policy(zero_advice, rate, z), d, model,
                     trials, seed, threads));
  return rep;
}

}  // namespace stopsim::harness
