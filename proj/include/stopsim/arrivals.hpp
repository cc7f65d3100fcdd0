#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "stopsim/distribution.hpp"
#include "stopsim/rng.hpp"

namespace stopsim::arrivals {

struct Arrival {
  double time;
  double value;
};

enum class ArrivalModel { poisson, fixed_n };

struct ArrivalSequence {
  std::vector<Arrival> entries;
  double t_start = 0.0;
  double t_end = 1.0;
  ArrivalModel model = ArrivalModel::poisson;

  double max_value() const {
    double m = 0.0;
    for (const auto& e : entries) m = e.value > m ? e.value : m;
    return m;
  }
};

// Poisson point process on [t_start, t_end) with i.i.d. values from d.
// Negative t_start is allowed (warmup phases run on [-z, 0)).
inline ArrivalSequence sample_poisson(const dist::ValueDistribution& d, double rate,
                                      double t_start, double t_end, RngStream& rng) {
  if (!(t_start <= t_end)) throw std::invalid_argument("sample_poisson: bad horizon");
  if (rate < 0.0) throw std::invalid_argument("sample_poisson: rate must be nonnegative");
  ArrivalSequence seq{{}, t_start, t_end, ArrivalModel::poisson};
  if (rate == 0.0) return seq;
  double t = t_start;
  for (;;) {
    t += rng.exponential(rate);
    if (t >= t_end) break;
    seq.entries.push_back({t, d.sample(rng)});
  }
  return seq;
}

// Exactly n i.i.d. draws; times i/n are synthetic and used for ordering only.
inline ArrivalSequence sample_fixed_n(const dist::ValueDistribution& d, std::size_t n,
                                      RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_fixed_n: need n >= 1");
  ArrivalSequence seq{{}, 0.0, 1.0, ArrivalModel::fixed_n};
  seq.entries.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    seq.entries.push_back({static_cast<double>(i) / static_cast<double>(n), d.sample(rng)});
  }
  return seq;
}

// Top ell order statistics of k i.i.d. uniforms, descending, without
// materializing all k draws: U_(k) = V^(1/k), then recurse on the prefix.
inline std::vector<double> top_uniform_order_stats(std::uint64_t k, std::size_t ell,
                                                   RngStream& rng) {
  std::vector<double> out;
  const std::size_t m = static_cast<std::size_t>(k < ell ? k : ell);
  out.reserve(m);
  double cur = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    cur *= std::exp(std::log(rng.uniform()) / static_cast<double>(k - j));
    out.push_back(cur);
  }
  return out;
}

// Top ell values among Poisson(rate * span) i.i.d. draws from d, descending;
// fewer when the realized count falls short.
inline std::vector<double> sample_top_values(const dist::ValueDistribution& d, double rate,
                                             double span, std::size_t ell, RngStream& rng) {
  if (rate < 0.0 || span < 0.0) throw std::invalid_argument("sample_top_values: bad arguments");
  const std::uint64_t k = rng.poisson(rate * span);
  auto us = top_uniform_order_stats(k, ell, rng);
  for (auto& u : us) u = d.quantile(u);
  return us;
}

}  // namespace stopsim::arrivals
