#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace stopsim {

namespace detail {

// murmur3/splitmix finalizer; bijective on 64 bits
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

}  // namespace detail

// Counter-based random stream keyed by (seed, stream id, draw index).
// Identical keys reproduce identical draws, so results are independent of
// worker count and scheduling. Streams are cheap to construct; harness code
// makes fresh ones per trial rather than sharing.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::mix64(seed ^ (stream * 0xa24baed4963ee407ULL))), counter_(0) {}

  std::uint64_t next_u64() {
    return detail::mix64(key_ ^ (++counter_ * 0x9e3779b97f4a7c15ULL));
  }

  // uniform on the open interval (0,1); never returns an endpoint
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) {
    if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log(uniform()) / rate;
  }

  // Poisson count. Sequential inversion for small means, Hormann's PTRS
  // transformed rejection for large ones (exact, O(1) expected draws).
  std::uint64_t poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 10.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

  std::uint64_t draws_used() const { return counter_; }

 private:
  std::uint64_t poisson_inversion(double mean) {
    double p = std::exp(-mean);
    double cum = p;
    double u = uniform();
    std::uint64_t k = 0;
    while (u > cum && k < 200) {
      ++k;
      p *= mean / static_cast<double>(k);
      cum += p;
    }
    return k;
  }

  std::uint64_t poisson_ptrs(double mean) {
    const double slam = std::sqrt(mean);
    const double llam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      double u = uniform() - 0.5;
      double v = uniform();
      double us = 0.5 - std::abs(u);
      double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kf * llam - mean - std::lgamma(kf + 1.0)) {
        return static_cast<std::uint64_t>(kf);
      }
    }
    throw std::runtime_error("poisson: rejection sampler failed to converge");
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace stopsim
