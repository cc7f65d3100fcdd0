#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stopsim/adapters.hpp"
#include "stopsim/arrivals.hpp"
#include "stopsim/distribution.hpp"
#include "stopsim/optimal_policy.hpp"
#include "stopsim/policy.hpp"
#include "stopsim/rng.hpp"

using namespace stopsim;
using arrivals::sample_fixed_n;
using arrivals::sample_poisson;

namespace {

// chi-square upper quantile via the Wilson-Hilferty cube approximation
double chi2_critical(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  const double t = 1.0 - a + z * std::sqrt(a);
  return df * t * t * t;
}

}  // namespace

TEST_CASE("sample_poisson basics") {
  const auto u01 = dist::make_uniform(0, 1);
  RngStream rng(3, 0);
  CHECK(sample_poisson(u01, 0.0, 0.0, 1.0, rng).entries.empty());
  CHECK_THROWS_AS(sample_poisson(u01, 5.0, 1.0, 0.0, rng), std::invalid_argument);

  double count_sum = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    RngStream r(17, trial);
    const auto seq = sample_poisson(u01, 200.0, 0.0, 1.0, r);
    count_sum += static_cast<double>(seq.entries.size());
    double prev = -1.0;
    for (const auto& e : seq.entries) {
      CHECK(e.time > prev);
      CHECK(e.time >= 0.0);
      CHECK(e.time < 1.0);
      prev = e.time;
    }
  }
  CHECK(count_sum / 10000.0 == doctest::Approx(200.0).epsilon(3.0 * std::sqrt(200.0 / 1e4) / 200.0));

  // warmup horizons start before zero
  RngStream r2(17, 99);
  const auto warm = sample_poisson(u01, 100.0, -2.0, 0.0, r2);
  CHECK(warm.entries.front().time >= -2.0);
  CHECK(warm.entries.back().time < 0.0);
  CHECK(warm.entries.size() > 100);
}

TEST_CASE("sequence determinism by (seed, stream)") {
  const auto e1 = dist::make_exponential(1.0);
  for (int stream = 0; stream < 4; ++stream) {
    RngStream a(42, stream), b(42, stream);
    const auto sa = sample_poisson(e1, 80.0, 0.0, 1.0, a);
    const auto sb = sample_poisson(e1, 80.0, 0.0, 1.0, b);
    REQUIRE(sa.entries.size() == sb.entries.size());
    for (std::size_t i = 0; i < sa.entries.size(); ++i) {
      CHECK(sa.entries[i].time == sb.entries[i].time);
      CHECK(sa.entries[i].value == sb.entries[i].value);
    }
  }
  RngStream a(42, 0), c(43, 0);
  const auto sa = sample_poisson(e1, 80.0, 0.0, 1.0, a);
  const auto sc = sample_poisson(e1, 80.0, 0.0, 1.0, c);
  CHECK(sa.entries.size() != sc.entries.size());
}

TEST_CASE("sample_fixed_n basics and pooled KS") {
  const auto e1 = dist::make_exponential(1.0);
  RngStream rng(5, 0);
  CHECK(sample_fixed_n(e1, 1, rng).entries.size() == 1);
  std::vector<double> pooled;
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream r(9, trial);
    const auto seq = sample_fixed_n(e1, 100, r);
    REQUIRE(seq.entries.size() == 100);
    for (const auto& e : seq.entries) pooled.push_back(e.value);
  }
  std::sort(pooled.begin(), pooled.end());
  double worst = 0.0;
  const double n = static_cast<double>(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    worst = std::max(worst, std::abs(e1.cdf(pooled[i]) - (static_cast<double>(i) + 0.5) / n));
  }
  CHECK(worst < 0.01);
}

TEST_CASE("poisson thinning consistency by chi-square") {
  // arrivals above the u-quantile form a Poisson process of rate n(1-u)
  const auto e1 = dist::make_exponential(1.0);
  const double rate = 40.0;
  for (double u : {0.25, 0.5, 0.9}) {
    const double x = e1.quantile(u);
    const double mean = rate * (1.0 - u);
    std::vector<std::uint64_t> counts;
    for (int trial = 0; trial < 10000; ++trial) {
      RngStream r(131 + static_cast<int>(100 * u), trial);
      const auto seq = sample_poisson(e1, rate, 0.0, 1.0, r);
      std::uint64_t k = 0;
      for (const auto& e : seq.entries) k += e.value > x ? 1 : 0;
      counts.push_back(k);
    }
    // bins 0..K with expected mass >= 5, overflow bin at the end
    std::vector<double> expected;
    double p = std::exp(-mean);
    double cum = 0.0;
    std::size_t kmax = 0;
    while (cum + p < 1.0 - 5.0 / 10000.0 && kmax < 200) {
      expected.push_back(p * 10000.0);
      cum += p;
      ++kmax;
      p *= mean / static_cast<double>(kmax);
    }
    expected.push_back((1.0 - cum) * 10000.0);
    std::vector<double> observed(expected.size(), 0.0);
    for (auto k : counts) observed[std::min<std::size_t>(k, expected.size() - 1)] += 1.0;
    double stat = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (expected[i] < 5.0) continue;  // sparse head bins fold into noise
      stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
      ++used;
    }
    CHECK(stat < chi2_critical(static_cast<double>(used - 1), 3.0902));  // p = 1e-3
  }
}

TEST_CASE("top order statistics shortcut matches brute force") {
  // recursion: ell-th largest of k uniforms without drawing all k
  const std::size_t k = 200, ell = 5;
  std::vector<double> quick, brute;
  for (int trial = 0; trial < 4000; ++trial) {
    RngStream r1(7, trial), r2(1007, trial);
    const auto top = arrivals::top_uniform_order_stats(k, ell, r1);
    REQUIRE(top.size() == ell);
    for (std::size_t j = 1; j < ell; ++j) CHECK(top[j] <= top[j - 1]);
    quick.push_back(top[ell - 1]);
    std::vector<double> all(k);
    for (auto& x : all) x = r2.uniform();
    std::nth_element(all.begin(), all.begin() + (ell - 1), all.end(), std::greater<double>());
    brute.push_back(all[ell - 1]);
  }
  std::sort(quick.begin(), quick.end());
  std::sort(brute.begin(), brute.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < quick.size(); ++i) {
    // two-sample KS via rank alignment on equal-size samples
    const double fq = (static_cast<double>(i) + 0.5) / quick.size();
    auto it = std::upper_bound(brute.begin(), brute.end(), quick[i]);
    const double fb = static_cast<double>(it - brute.begin()) / brute.size();
    ks = std::max(ks, std::abs(fq - fb));
  }
  CHECK(ks < 0.045);  // ~1.95 sqrt(2/n) at n = 4000
  // fewer arrivals than ell: return what exists
  RngStream r(3, 3);
  CHECK(arrivals::top_uniform_order_stats(3, 5, r).size() == 3);
  CHECK(arrivals::top_uniform_order_stats(0, 5, r).empty());
}

TEST_CASE("n_from_poisson adapter: parameters and guarantee") {
  const auto u01 = dist::make_uniform(0, 1);
  auto inner = std::make_shared<policies::ClairvoyantMaxPolicy>();
  auto adapter = std::make_shared<arrivals::NFromPoissonAdapter>(inner, 100);
  CHECK(adapter->eps() == doctest::Approx(0.21460).epsilon(1e-4));
  CHECK(adapter->lambda() == doctest::Approx(78.540).epsilon(1e-4));

  double alg_sum = 0.0, max_sum = 0.0;
  for (int trial = 0; trial < 20000; ++trial) {
    RngStream sg(61, 2 * trial), pg(61, 2 * trial + 1);
    const auto seq = sample_fixed_n(u01, 100, sg);
    const auto res = policies::run_policy(*adapter, seq, pg);
    alg_sum += res.reward;
    max_sum += seq.max_value();
    // accepted value is always a real arrival's value
    if (res.trace.accepted) {
      bool matches = false;
      for (const auto& e : seq.entries) matches = matches || e.value == res.reward;
      CHECK(matches);
    }
  }
  const double eps = adapter->eps();
  CHECK(alg_sum / max_sum >= 1.0 - 4.0 * eps);
  // the coupling feeds ~lambda of the n real values, so the clairvoyant
  // keeps roughly lambda/n of the maximum
  CHECK(alg_sum / max_sum == doctest::Approx(adapter->lambda() / 100.0).epsilon(0.03));
}

TEST_CASE("poisson_from_n adapter: padded law and guarantee") {
  const auto u01 = dist::make_uniform(0, 1);
  const double eps = 0.5;
  const std::size_t n = 50;
  const auto padded = arrivals::window_padded_law(u01, eps);
  // window void probability e^-eps becomes the zero atom
  REQUIRE(padded.atoms().size() == 1);
  CHECK(padded.atoms()[0].mass == doctest::Approx(std::exp(-eps)).epsilon(1e-15));
  for (double x : {0.1, 0.5, 0.9}) {
    CHECK(1.0 - padded.cdf(x) ==
          doctest::Approx((1.0 - u01.cdf(x)) * (1.0 - std::exp(-eps))).epsilon(1e-13));
  }

  auto [dp, values] = policies::dp_optimal_n_policy(padded, n);
  const double inner_ratio = values.back() / dist::expected_max_n(padded, n);
  auto wrapped = arrivals::poisson_from_n_adapter(dp, eps, n);
  const double lambda = eps * static_cast<double>(n);

  double alg_sum = 0.0, max_sum = 0.0, d2 = 0.0;
  const int trials = 20000;
  for (int trial = 0; trial < trials; ++trial) {
    RngStream sg(87, 2 * trial), pg(87, 2 * trial + 1);
    const auto seq = sample_poisson(u01, lambda, 0.0, 1.0, sg);
    const double reward = policies::run_policy_reward(*wrapped, seq, pg);
    alg_sum += reward;
    max_sum += seq.max_value();
    const double diff = reward - seq.max_value();
    d2 += diff * diff;
  }
  const double ratio = alg_sum / max_sum;
  const double se = std::sqrt(d2 / trials) / std::sqrt(static_cast<double>(trials)) /
                    (max_sum / trials);
  CHECK(ratio >= inner_ratio * (1.0 - eps / 2.0) - 3.0 * se);
}

TEST_CASE("adapters accept at most once per run") {
  const auto u01 = dist::make_uniform(0, 1);
  auto inner_n = policies::dp_optimal_n_policy(arrivals::window_padded_law(u01, 0.3), 20).first;
  auto wrapped = arrivals::poisson_from_n_adapter(inner_n, 0.3, 20);
  for (int trial = 0; trial < 2000; ++trial) {
    RngStream sg(15, 2 * trial), pg(15, 2 * trial + 1);
    const auto seq = sample_poisson(u01, 6.0, 0.0, 1.0, sg);
    const auto res = policies::run_policy(*wrapped, seq, pg);
    std::size_t accepts = 0;
    for (const auto& d : res.trace.decisions) {
      accepts += d.decision == policies::Decision::accept ? 1 : 0;
    }
    CHECK(accepts <= 1);
    if (res.trace.accepted) {
      bool matches = false;
      for (const auto& e : seq.entries) matches = matches || e.value == res.reward;
      CHECK(matches);
    }
  }
}
