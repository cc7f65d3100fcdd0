#include <doctest.h>

#include <cmath>
#include <vector>

#include "stopsim/function_grid.hpp"
#include "stopsim/lambert_w.hpp"
#include "stopsim/ode.hpp"
#include "stopsim/quadrature.hpp"
#include "stopsim/rng.hpp"
#include "stopsim/roots.hpp"
#include "stopsim/tau_pair.hpp"

using namespace stopsim;
using namespace stopsim::num;

static constexpr double kE = 2.718281828459045235;

TEST_CASE("lambert_w0 anchor values") {
  CHECK(lambert_w0(0.0) == 0.0);
  CHECK(lambert_w0(-1.0 / kE) == doctest::Approx(-1.0).epsilon(1e-12));
  // ln(0.699491), the tau2(0.25) tick mark
  CHECK(lambert_w0(-0.25) == doctest::Approx(std::log(0.699491)).epsilon(1e-5));
  CHECK(lambert_w0(1.0) * std::exp(lambert_w0(1.0)) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(lambert_w0(-0.4), std::domain_error);
}

TEST_CASE("lambert_w_minus1 anchor values") {
  CHECK(lambert_w_minus1(-1.0 / kE) == doctest::Approx(-1.0).epsilon(1e-12));
  // ln(0.116101), the tau1(0.25) tick mark
  CHECK(lambert_w_minus1(-0.25) == doctest::Approx(std::log(0.116101)).epsilon(1e-5));
  const double w = lambert_w_minus1(-0.05);
  CHECK(w <= -1.0);
  CHECK(w * std::exp(w) == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK_THROWS_AS(lambert_w_minus1(0.0), std::domain_error);
  CHECK_THROWS_AS(lambert_w_minus1(-0.4), std::domain_error);
}

TEST_CASE("lambert branches: residual property on random inputs") {
  RngStream rng(20240517, 1);
  for (int i = 0; i < 10000; ++i) {
    // sample the W0 domain with bias toward the interesting left part
    double x;
    if (i % 3 == 0) x = -1.0 / kE + rng.uniform() / kE;          // [-1/e, 0]
    else if (i % 3 == 1) x = rng.uniform() * 10.0;               // [0, 10]
    else x = rng.uniform() * 700.0;                              // far field
    const double w = lambert_w0(x);
    CHECK(w >= -1.0);
    const double resid = w * std::exp(w) - x;
    CHECK(std::abs(resid) <= 1e-11 * std::max(std::abs(x), 1e-3));
  }
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    const double x = -std::exp(-1.0 - 36.0 * u) * (u < 0.5 ? 1.0 : kE * std::exp(-1.0));
    const double xm = std::max(x, -1.0 / kE);
    const double w0 = lambert_w0(xm);
    const double wm = lambert_w_minus1(xm);
    CHECK(wm <= -1.0);
    CHECK(w0 >= -1.0);
    CHECK(std::abs(wm * std::exp(wm) - xm) <= 1e-11 * std::abs(xm));
  }
}

TEST_CASE("tau_pair endpoints and sample point") {
  auto [a0, b0] = tau_pair(0.0);
  CHECK(a0 == 0.0);
  CHECK(b0 == 1.0);
  auto [a1, b1] = tau_pair(1.0 / kE);
  CHECK(a1 == doctest::Approx(1.0 / kE).epsilon(1e-12));
  CHECK(b1 == doctest::Approx(1.0 / kE).epsilon(1e-12));
  auto [t1, t2] = tau_pair(0.25);
  CHECK(t1 == doctest::Approx(0.116101).epsilon(1e-5));
  CHECK(t2 == doctest::Approx(0.699491).epsilon(1e-5));
  CHECK_THROWS_AS(tau_pair(-0.01), std::domain_error);
  CHECK_THROWS_AS(tau_pair(0.4), std::domain_error);
}

TEST_CASE("tau_pair solves tau ln(1/tau) = gamma and is monotone in gamma") {
  double prev_t1 = -1.0, prev_t2 = 2.0;
  for (int i = 0; i <= 1000; ++i) {
    const double g = (1.0 / kE) * i / 1000.0;
    auto [t1, t2] = tau_pair(g);
    CHECK(t1 <= 1.0 / kE + 1e-15);
    CHECK(t2 >= 1.0 / kE - 1e-15);
    if (t1 > 0.0) CHECK(std::abs(t1 * std::log(1.0 / t1) - g) <= 1e-10);
    if (t2 < 1.0) CHECK(std::abs(t2 * std::log(1.0 / t2) - g) <= 1e-10);
    CHECK(t1 >= prev_t1 - 1e-12);
    CHECK(t2 <= prev_t2 + 1e-12);
    prev_t1 = t1;
    prev_t2 = t2;
  }
}

TEST_CASE("integrate_adaptive basics") {
  CHECK(integrate_adaptive([](double) { return 1.0; }, 0.0, 1.0, 1e-10) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate_adaptive([](double x) { return x; }, 0.0, 1.0, 1e-10) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // integrand of the constant-defining equation; refinement self-consistency
  auto f = [](double y) {
    const double yl = y > 0.0 ? y * (std::log(y) - 1.0) : 0.0;
    return 1.0 / (1.0 - yl);
  };
  const double coarse = integrate_adaptive(f, 0.0, 1.0, 1e-7);
  const double fine = integrate_adaptive(f, 0.0, 1.0, 1e-8);
  CHECK(std::abs(coarse - fine) <= 1e-7);
}

TEST_CASE("find_root_bisect") {
  CHECK(find_root_bisect([](double x) { return x - 0.5; }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(0.5).epsilon(1e-10));
  CHECK(find_root_bisect([](double x) { return x * x - 2.0; }, 1.0, 2.0, 1e-10) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK_THROWS_AS(find_root_bisect([](double x) { return x + 3.0; }, 0.0, 1.0, 1e-10),
                  std::invalid_argument);
}

TEST_CASE("solve_ivp fixed-step order four") {
  auto zero = solve_ivp([](double, double) { return 0.0; }, 1.0, 0.0, 1.0, 64);
  for (double t : {0.0, 0.25, 0.7, 1.0}) CHECK(zero.eval(t) == doctest::Approx(1.0).epsilon(1e-14));
  auto decay = solve_ivp([](double, double y) { return -y; }, 1.0, 0.0, 1.0, 1 << 10);
  CHECK(std::abs(decay.back_value() - std::exp(-1.0)) <= 1e-9);
  CHECK_THROWS_AS(solve_ivp([](double, double y) { return -y; }, 1.0, 0.0, 1.0, 8),
                  std::invalid_argument);
}

TEST_CASE("FunctionGrid validation and evaluation") {
  CHECK_THROWS_AS(FunctionGrid({0.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(FunctionGrid({0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
  FunctionGrid g({0.0, 1.0, 2.0}, {0.0, 1.0, 4.0});
  CHECK(g.monotonicity() == Monotonicity::increasing);
  CHECK(g.eval(0.0) == 0.0);
  CHECK(g.eval(2.0) == 4.0);
  CHECK_THROWS_AS(g.eval(-0.5), std::domain_error);
  CHECK_THROWS_AS(g.eval(2.5), std::domain_error);
  CHECK_THROWS_AS(FunctionGrid({0.0, 1.0}, {1.0, 2.0}, Monotonicity::decreasing),
                  std::invalid_argument);
}

TEST_CASE("FunctionGrid inverse round-trip on random monotone grids") {
  RngStream rng(7, 3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 5 + (rng.next_u64() % 60);
    std::vector<double> t(n), v(n);
    double tc = rng.uniform();
    double vc = 10.0 * rng.uniform();
    const bool inc = rep % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = tc;
      v[i] = vc;
      tc += 0.01 + rng.uniform();
      vc += (inc ? 1.0 : -1.0) * (0.01 + 3.0 * rng.uniform());
    }
    FunctionGrid g(t, v, inc ? Monotonicity::increasing : Monotonicity::decreasing);
    for (int k = 0; k < 100; ++k) {
      const double u = rng.uniform();
      const double target = g.front_value() + u * (g.back_value() - g.front_value());
      const double tt = g.inverse(target);
      CHECK(std::abs(g.eval(tt) - target) <= 1e-8 * (1.0 + std::abs(target)));
    }
  }
}

TEST_CASE("RngStream reproducibility and stream independence") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool identical = true, distinct = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    identical = identical && (x == b.next_u64());
    distinct = distinct || (x != c.next_u64());
  }
  CHECK(identical);
  CHECK(distinct);
}

TEST_CASE("RngStream poisson sampler matches mean and variance") {
  RngStream rng(99, 0);
  for (double mean : {0.5, 4.0, 40.0, 10000.0}) {
    const int reps = 4000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < reps; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double m = s / reps;
    const double var = s2 / reps - m * m;
    const double se_mean = std::sqrt(mean / reps);
    CHECK(std::abs(m - mean) <= 5.0 * se_mean);
    CHECK(var == doctest::Approx(mean).epsilon(0.15));
  }
}
