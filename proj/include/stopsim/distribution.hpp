#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stopsim/quadrature.hpp"
#include "stopsim/rng.hpp"

namespace stopsim::dist {

struct Atom {
  double x;
  double mass;
};

// Backend for a nonnegative value law. cdf is right-continuous; quantile is
// the generalized inverse; tail_integral(v) = integral of (1 - cdf) over
// [max(v,0), inf), closed form per family where one exists.
class Impl {
 public:
  virtual ~Impl() = default;
  virtual double cdf(double x) const = 0;
  virtual double quantile(double u) const = 0;
  virtual double tail_integral(double v) const = 0;
  virtual double lower() const = 0;
  virtual double upper() const = 0;  // may be +inf
  virtual std::vector<Atom> atoms() const { return {}; }
  virtual std::string describe() const = 0;
};

class ValueDistribution {
 public:
  explicit ValueDistribution(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {
    if (!impl_) throw std::invalid_argument("ValueDistribution: null impl");
  }

  double cdf(double x) const { return impl_->cdf(x); }
  double quantile(double u) const {
    if (u < 0.0 || u > 1.0) throw std::domain_error("quantile: u outside [0,1]");
    return impl_->quantile(u);
  }
  // inverse-CDF sampling; monotone in the underlying uniform draw
  double sample(RngStream& rng) const { return impl_->quantile(rng.uniform()); }
  double tail_integral(double v) const { return impl_->tail_integral(v); }
  double mean() const { return impl_->tail_integral(0.0); }
  double lower() const { return impl_->lower(); }
  double upper() const { return impl_->upper(); }
  std::vector<Atom> atoms() const { return impl_->atoms(); }
  // left limit of the CDF; differs from cdf(x) only at declared atoms
  double cdf_left(double x) const {
    double m = 0.0;
    for (const auto& a : impl_->atoms()) {
      if (a.x == x) m += a.mass;
    }
    return impl_->cdf(x) - m;
  }
  std::string describe() const { return impl_->describe(); }
  const std::shared_ptr<const Impl>& impl() const { return impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

namespace families {

class Uniform final : public Impl {
 public:
  Uniform(double a, double b) : a_(a), b_(b) {
    if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("uniform: need 0 <= a < b");
  }
  double cdf(double x) const override {
    if (x < a_) return 0.0;
    if (x >= b_) return 1.0;
    return (x - a_) / (b_ - a_);
  }
  double quantile(double u) const override { return a_ + u * (b_ - a_); }
  double tail_integral(double v) const override {
    v = std::max(v, 0.0);
    if (v >= b_) return 0.0;
    const double half = 0.5 * (b_ - a_);
    if (v <= a_) return (a_ - v) + half;
    const double w = b_ - v;
    return w * w / (2.0 * (b_ - a_));
  }
  double lower() const override { return a_; }
  double upper() const override { return b_; }
  std::string describe() const override {
    return "uniform(a=" + std::to_string(a_) + ",b=" + std::to_string(b_) + ")";
  }

 private:
  double a_, b_;
};

class Exponential final : public Impl {
 public:
  explicit Exponential(double rate) : rate_(rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
  }
  double cdf(double x) const override { return x <= 0.0 ? 0.0 : -std::expm1(-rate_ * x); }
  double quantile(double u) const override {
    return u >= 1.0 ? quantile(1.0 - 1e-16) : -std::log1p(-u) / rate_;
  }
  double tail_integral(double v) const override {
    if (v <= 0.0) return -v + 1.0 / rate_;
    return std::exp(-rate_ * v) / rate_;
  }
  double lower() const override { return 0.0; }
  double upper() const override { return std::numeric_limits<double>::infinity(); }
  std::string describe() const override { return "exponential(rate=" + std::to_string(rate_) + ")"; }

 private:
  double rate_;
};

// Pareto with shape alpha and scale xm, truncated and renormalized at cap.
// The heavy-tail member of the test corpus; alpha <= 1 is fine because the
// truncation keeps every moment finite.
class TruncatedPareto final : public Impl {
 public:
  TruncatedPareto(double shape, double scale, double cap)
      : shape_(shape), scale_(scale), cap_(cap) {
    if (!(shape > 0.0) || !(scale > 0.0) || !(cap > scale)) {
      throw std::invalid_argument("pareto: need shape > 0, 0 < scale < cap");
    }
    z_ = 1.0 - std::pow(scale_ / cap_, shape_);
  }
  double cdf(double x) const override {
    if (x < scale_) return 0.0;
    if (x >= cap_) return 1.0;
    return (1.0 - std::pow(scale_ / x, shape_)) / z_;
  }
  double quantile(double u) const override {
    if (u >= 1.0) return cap_;
    return scale_ * std::pow(1.0 - z_ * u, -1.0 / shape_);
  }
  double tail_integral(double v) const override {
    v = std::max(v, 0.0);
    if (v >= cap_) return 0.0;
    if (v < scale_) return (scale_ - v) + tail_integral(scale_);
    // integral of ((xm/x)^a - (xm/cap)^a)/z over [v, cap]
    const double pa = std::pow(scale_ / cap_, shape_);
    double head;
    if (shape_ == 1.0) {
      head = scale_ * std::log(cap_ / v);
    } else {
      head = std::pow(scale_, shape_) *
             (std::pow(v, 1.0 - shape_) - std::pow(cap_, 1.0 - shape_)) / (shape_ - 1.0);
    }
    return (head - pa * (cap_ - v)) / z_;
  }
  double lower() const override { return scale_; }
  double upper() const override { return cap_; }
  std::string describe() const override {
    return "pareto(shape=" + std::to_string(shape_) + ",scale=" + std::to_string(scale_) +
           ",cap=" + std::to_string(cap_) + ")";
  }

 private:
  double shape_, scale_, cap_, z_;
};

// Degenerate law: all mass at one point (the useless-advice distribution).
class PointMass final : public Impl {
 public:
  explicit PointMass(double v) : v_(v) {
    if (!(v >= 0.0)) throw std::invalid_argument("point: value must be nonnegative");
  }
  double cdf(double x) const override { return x >= v_ ? 1.0 : 0.0; }
  double quantile(double) const override { return v_; }
  double tail_integral(double v) const override { return std::max(0.0, v_ - std::max(v, 0.0)); }
  double lower() const override { return v_; }
  double upper() const override { return v_; }
  std::vector<Atom> atoms() const override { return {{v_, 1.0}}; }
  std::string describe() const override { return "point(v=" + std::to_string(v_) + ")"; }

 private:
  double v_;
};

class ZeroPadded final : public Impl {
 public:
  ZeroPadded(ValueDistribution inner, double zero_prob)
      : inner_(std::move(inner)), p0_(zero_prob) {
    if (!(zero_prob >= 0.0) || !(zero_prob < 1.0)) {
      throw std::domain_error("pad_with_zeros: zero_prob outside [0,1)");
    }
  }
  double cdf(double x) const override {
    if (x < 0.0) return 0.0;
    return p0_ + (1.0 - p0_) * inner_.cdf(x);
  }
  double quantile(double u) const override {
    if (u <= p0_) return 0.0;
    return inner_.quantile((u - p0_) / (1.0 - p0_));
  }
  double tail_integral(double v) const override {
    return (1.0 - p0_) * inner_.tail_integral(std::max(v, 0.0));
  }
  double lower() const override { return 0.0; }
  double upper() const override { return inner_.upper(); }
  std::vector<Atom> atoms() const override {
    std::vector<Atom> out{{0.0, p0_}};
    for (auto a : inner_.atoms()) out.push_back({a.x, (1.0 - p0_) * a.mass});
    return out;
  }
  std::string describe() const override {
    return "padded(zero_prob=" + std::to_string(p0_) + ",inner=" + inner_.describe() + ")";
  }
  const ValueDistribution& inner() const { return inner_; }
  double zero_prob() const { return p0_; }

 private:
  ValueDistribution inner_;
  double p0_;
};

}  // namespace families

inline ValueDistribution make_uniform(double a, double b) {
  return ValueDistribution(std::make_shared<families::Uniform>(a, b));
}
inline ValueDistribution make_exponential(double rate) {
  return ValueDistribution(std::make_shared<families::Exponential>(rate));
}
inline ValueDistribution make_pareto(double shape, double scale, double cap) {
  return ValueDistribution(std::make_shared<families::TruncatedPareto>(shape, scale, cap));
}
inline ValueDistribution make_point(double v) {
  return ValueDistribution(std::make_shared<families::PointMass>(v));
}

// Mass zero_prob at 0, the remaining (1 - zero_prob) follows d; the tail
// identity 1 - F~(x) = (1 - zero_prob)(1 - F(x)) holds for x > 0.
inline ValueDistribution pad_with_zeros(const ValueDistribution& d, double zero_prob) {
  if (zero_prob == 0.0) return d;
  return ValueDistribution(std::make_shared<families::ZeroPadded>(d, zero_prob));
}

namespace detail {

// cheap divergence guard: probe the tail beyond the 1-1e-6 quantile
inline void check_tail_integrable(const ValueDistribution& d, double rate_like) {
  if (std::isfinite(d.upper())) return;
  double x = std::max(d.quantile(1.0 - 1e-6), 1.0);
  for (int k = 0; k < 8; ++k, x *= 4.0) {
    if (1.0 - d.cdf(x) > std::pow(x, -1.01)) {
      throw std::runtime_error("divergent tail detected for " + d.describe());
    }
  }
  (void)rate_like;
}

// effective upper integration limit: remainder mass above it is negligible
inline double effective_upper(const ValueDistribution& d, double rate, double tol_abs) {
  if (std::isfinite(d.upper())) return d.upper();
  double x = std::max(d.quantile(1.0 - 1e-9), 1.0);
  for (int k = 0; k < 200 && rate * d.tail_integral(x) > 0.1 * tol_abs; ++k) x *= 1.5;
  return x;
}

template <typename G>
double integrate_piecewise(const ValueDistribution& d, double hi, double tol_abs, const G& g) {
  std::vector<double> cuts{0.0, hi};
  for (const auto& a : d.atoms()) {
    if (a.x > 0.0 && a.x < hi) cuts.push_back(a.x);
  }
  if (d.lower() > 0.0 && d.lower() < hi) cuts.push_back(d.lower());
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] < 1e-300) continue;
    total += num::integrate_adaptive(g, cuts[i], cuts[i + 1], tol_abs / cuts.size());
  }
  return total;
}

}  // namespace detail

// E[max of Poisson(rate) arrivals on a unit horizon] =
// integral of 1 - exp(-rate (1 - F(x))) over x >= 0.
inline double expected_max_poisson(const ValueDistribution& d, double rate,
                                   double tol_rel = 1e-8) {
  if (!(rate > 0.0)) {
    if (rate == 0.0) return 0.0;
    throw std::invalid_argument("expected_max_poisson: rate must be nonnegative");
  }
  detail::check_tail_integrable(d, rate);
  const double scale = std::max(1.0, std::min(rate, 1.0) * d.quantile(0.99));
  const double tol_abs = tol_rel * scale;
  const double hi = detail::effective_upper(d, rate, tol_abs);
  auto g = [&](double x) { return -std::expm1(-rate * (1.0 - d.cdf(x))); };
  return detail::integrate_piecewise(d, hi, tol_abs, g);
}

// E[max of n i.i.d. draws] = integral of 1 - F(x)^n over x >= 0.
inline double expected_max_n(const ValueDistribution& d, std::size_t n, double tol_rel = 1e-8) {
  if (n < 1) throw std::invalid_argument("expected_max_n: need n >= 1");
  detail::check_tail_integrable(d, static_cast<double>(n));
  const double scale = std::max(1.0, d.quantile(0.99));
  const double tol_abs = tol_rel * scale;
  const double hi = detail::effective_upper(d, static_cast<double>(n), tol_abs);
  const double nn = static_cast<double>(n);
  auto g = [&](double x) {
    const double f = d.cdf(x);
    return f >= 1.0 ? 0.0 : -std::expm1(nn * std::log(f < 1e-300 ? 1e-300 : f));
  };
  return detail::integrate_piecewise(d, hi, tol_abs, g);
}

}  // namespace stopsim::dist
