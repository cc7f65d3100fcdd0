#pragma once

#include <array>
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
#include "stopsim/quadrature.hpp"
#include "stopsim/roots.hpp"

namespace stopsim::kertz {

// ---------------------------------------------------------------------------
// beta_n: the constant with  integral_{e^-n}^1 ((beta^-1 - 1) - y(ln y - 1))^-1 dy = 1.
// Decreasing in n, converging exponentially to the n -> inf limit beta0 ~ 0.7454.
// Below n ~ e-1 the equation has no root in (0,1); callers use n >= 2.
// ---------------------------------------------------------------------------

namespace detail {

inline double defining_integral(double beta, double lo) {
  const double c = 1.0 / beta - 1.0;
  auto f = [c](double y) {
    const double yl = y > 0.0 ? y * (std::log(y) - 1.0) : 0.0;
    return 1.0 / (c - yl);
  };
  return num::integrate_adaptive(f, lo, 1.0, 1e-13);
}

}  // namespace detail

// Solved to the last representable digit: the instance endpoint e^-n is
// exponentially sensitive to this root, so slack here would swamp it.
inline double beta_n(double n) {
  if (!(n > 0.0)) throw std::domain_error("beta_n: rate must be positive");
  const double lo = std::isinf(n) ? 0.0 : std::exp(-n);
  double hi = 0.999;
  while (detail::defining_integral(hi, lo) < 1.0 && hi < 1.0 - 1e-9) {
    hi = 1.0 - 0.1 * (1.0 - hi);
  }
  return num::find_root_bisect([lo](double b) { return detail::defining_integral(b, lo) - 1.0; },
                               0.5, hi, 1e-16);
}

inline double beta_limit() {
  static const double b0 = beta_n(std::numeric_limits<double>::infinity());
  return b0;
}

// ---------------------------------------------------------------------------
// The curves behind the adversarial instance.
//   y'(t) = y (ln y - 1) - (beta_n^-1 - 1),  y(0) = 1,  y(1) = e^-n
//   r*(t) = -integral_t^1 ds / y'(s)            (decreasing, r*(1) = 0)
// The third accumulator feeds the instance's tail integral:
//   C(t)  = integral_0^t ln(1/y(s)) * (-1/y'(s)) ds
// ---------------------------------------------------------------------------

struct HardCurves {
  double beta;
  num::FunctionGrid y;
  num::FunctionGrid r;
  num::FunctionGrid cum;  // C(t), increasing
};

namespace detail {

// y (ln y - 1) - c, tolerating roundoff-scale y where the first term is
// negligible anyway; endpoint values sit at e^-n, which is roundoff scale
// for the largest admissible rates.
inline double y_rhs(double y, double c) {
  if (y < 1e-250) {
    if (y < -1e-9) throw std::runtime_error("hard curves: y diverged below zero");
    return -c;
  }
  return y * (std::log(y) - 1.0) - c;
}

inline double log_floor(double y) { return std::log(y > 1e-250 ? y : 1e-250); }

inline HardCurves solve_hard_curves(double n, std::size_t steps) {
  if (!(n > 0.0) || n > 64.0) {
    throw std::domain_error("hard curves: rate must be in (0, 64]");
  }
  const double beta = beta_n(n);
  const double c = 1.0 / beta - 1.0;
  auto sys = [c](double, const std::array<double, 3>& s) -> std::array<double, 3> {
    const double y = s[0];
    const double yp = y_rhs(y, c);
    const double g = -1.0 / yp;
    return {yp, g, -log_floor(y) * g};
  };
  const auto path = num::rk4_path<3>(sys, {1.0, 0.0, 0.0}, 0.0, 1.0, steps);
  const double h = 1.0 / static_cast<double>(steps);
  std::vector<double> t(steps + 1), yv(steps + 1), rv(steps + 1), cv(steps + 1);
  const double a_end = path.back()[1];
  for (std::size_t i = 0; i <= steps; ++i) {
    t[i] = (i == steps) ? 1.0 : h * static_cast<double>(i);
    yv[i] = path[i][0];
    rv[i] = a_end - path[i][1];
    cv[i] = path[i][2];
  }
  return HardCurves{beta, num::FunctionGrid(t, yv, num::Monotonicity::decreasing),
                    num::FunctionGrid(t, rv, num::Monotonicity::decreasing),
                    num::FunctionGrid(std::move(t), std::move(cv), num::Monotonicity::increasing)};
}

}  // namespace detail

inline constexpr std::size_t kDefaultOdeSteps = std::size_t{1} << 14;

// Decreasing grid for y(t) on [0,1]; endpoint y(1) matches e^-n.
inline num::FunctionGrid build_y_tilde(double n, std::size_t steps = kDefaultOdeSteps) {
  if (!(n > 0.0) || n > 64.0) throw std::domain_error("build_y_tilde: rate must be in (0, 64]");
  const double c = 1.0 / beta_n(n) - 1.0;
  auto rhs = [c](double, double y) { return detail::y_rhs(y, c); };
  return num::solve_ivp(rhs, 1.0, 0.0, 1.0, steps);
}

// Decreasing grid for r*(t) on [0,1] with r*(1) = 0.
inline num::FunctionGrid build_r_star(double n, std::size_t steps = kDefaultOdeSteps) {
  return detail::solve_hard_curves(n, steps).r;
}

// ---------------------------------------------------------------------------
// The adversarial value distribution:
//   CDF(x) = 1 + ln(y((r*)^-1(x))) / n      on [0, r*(q)]
//          = 1 + ln(y(q)) / n               on (r*(q), H]   (atom of the rest at H)
// with H = 1/(y'(q) ln y(q)) + r*(q).
// ---------------------------------------------------------------------------

class HardInstance;

namespace detail {

struct HardState {
  double n, q, beta, c;
  num::FunctionGrid y, r, cum;
  double x_rq;        // r*(q)
  double y_q;         // y(q)
  double plateau;     // CDF value on (r*(q), H)
  double atom_mass;   // 1 - plateau
  double big_h;
  double cum_q;       // C(q)
};

class HardDist final : public dist::Impl {
 public:
  explicit HardDist(std::shared_ptr<const HardState> s) : s_(std::move(s)) {}

  double cdf(double x) const override {
    const auto& s = *s_;
    if (x < 0.0) return 0.0;
    if (x >= s.big_h) return 1.0;
    if (x > s.x_rq) return s.plateau;
    const double t = s.r.inverse(x);
    const double v = 1.0 + std::log(s.y.eval(t)) / s.n;
    return std::clamp(v, 0.0, s.plateau);
  }

  double quantile(double u) const override {
    const auto& s = *s_;
    if (u > s.plateau) return s.big_h;
    double ytarget = std::exp(s.n * (u - 1.0));
    ytarget = std::clamp(ytarget, s.y.back_value(), s.y.front_value());
    const double t = s.y.inverse(ytarget);
    return std::max(0.0, s.r.eval(t));
  }

  double tail_integral(double v) const override {
    const auto& s = *s_;
    if (v < 0.0) return -v + tail_integral(0.0);
    if (v >= s.big_h) return 0.0;
    if (v >= s.x_rq) return (s.big_h - v) * s.atom_mass;
    const double t = s.r.inverse(v);
    const double continuous = (s.cum.eval(t) - s.cum_q) / s.n;
    return continuous + (s.big_h - s.x_rq) * s.atom_mass;
  }

  double lower() const override { return 0.0; }
  double upper() const override { return s_->big_h; }
  std::vector<dist::Atom> atoms() const override { return {{s_->big_h, s_->atom_mass}}; }
  std::string describe() const override {
    return "hard(n=" + std::to_string(s_->n) + ",q=" + std::to_string(s_->q) + ")";
  }
  const std::shared_ptr<const HardState>& state() const { return s_; }

 private:
  std::shared_ptr<const HardState> s_;
};

}  // namespace detail

class HardInstance {
 public:
  HardInstance(double n, double q, std::size_t steps) {
    if (!(q > 0.0) || q > 0.1) throw std::domain_error("HardInstance: need 0 < q <= 0.1");
    // The CDF's low branch needs y(1) = e^-n to a few digits. Truncation
    // near the endpoint grows fast with n (the equation's curvature is
    // unbounded as y -> 0), so escalate the step count, and refuse rates
    // where even that cannot reach e^-n in doubles.
    if (n > 16.0) throw std::domain_error("HardInstance: rate capped at 16");
    if (n > 14.0) steps = std::max(steps, std::size_t{1} << 18);
    else if (n > 12.0) steps = std::max(steps, std::size_t{1} << 16);
    auto curves = detail::solve_hard_curves(n, steps);
    auto st = std::make_shared<detail::HardState>(detail::HardState{
        n, q, curves.beta, 1.0 / curves.beta - 1.0, std::move(curves.y), std::move(curves.r),
        std::move(curves.cum), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    st->x_rq = st->r.eval(q);
    st->y_q = st->y.eval(q);
    const double ypq = detail::y_rhs(st->y_q, st->c);
    st->big_h = 1.0 / (ypq * std::log(st->y_q)) + st->x_rq;
    st->atom_mass = -std::log(st->y_q) / n;
    st->plateau = 1.0 - st->atom_mass;
    st->cum_q = st->cum.eval(q);
    if (!(st->big_h > st->x_rq)) throw std::runtime_error("HardInstance: H <= r*(q)");
    state_ = std::move(st);
  }

  explicit HardInstance(std::shared_ptr<const detail::HardState> st) : state_(std::move(st)) {
    if (!state_) throw std::invalid_argument("HardInstance: null state");
  }

  double n() const { return state_->n; }
  double q() const { return state_->q; }
  double beta() const { return state_->beta; }
  const num::FunctionGrid& y_tilde() const { return state_->y; }
  const num::FunctionGrid& r_star() const { return state_->r; }
  double big_h() const { return state_->big_h; }
  double atom_mass() const { return state_->atom_mass; }
  double y_prime(double t) const { return detail::y_rhs(state_->y.eval(t), state_->c); }

  dist::ValueDistribution distribution() const {
    return dist::ValueDistribution(std::make_shared<detail::HardDist>(state_));
  }

 private:
  std::shared_ptr<const detail::HardState> state_;
};

inline HardInstance build_hard_instance(double n, double q,
                                        std::size_t steps = kDefaultOdeSteps) {
  return HardInstance(n, q, steps);
}

// Pulls the shared state back out of a distribution built by HardInstance;
// null when d is some other law.
inline std::shared_ptr<const detail::HardState> hard_state_of(const dist::ValueDistribution& d) {
  const auto* p = dynamic_cast<const detail::HardDist*>(d.impl().get());
  return p ? p->state() : nullptr;
}

// ---------------------------------------------------------------------------
// Closed forms for the instance value:
//   OPT_q = (1 - y(q)^q) H + y(q)^q r*(q)
//   MAX_q = -integral_q^1 (1 - y)/y' dt + (H - r*(q)) (1 - y(q))
// ---------------------------------------------------------------------------

struct OptMax {
  double opt_q;
  double max_q;
  double ratio;
};

inline OptMax analytic_opt_and_max(const HardInstance& inst) {
  const auto& y = inst.y_tilde();
  const double q = inst.q();
  const double yq = y.eval(q);
  const double rq = inst.r_star().eval(q);
  const double pow_yq = std::pow(yq, q);
  const double opt = (1.0 - pow_yq) * inst.big_h() + pow_yq * rq;
  auto f = [&](double t) {
    const double yt = y.eval(t);
    return (1.0 - yt) / (-inst.y_prime(t));
  };
  const double max_cont = num::integrate_adaptive(f, q, 1.0, 1e-11);
  const double max_q = max_cont + (inst.big_h() - rq) * (1.0 - yq);
  return {opt, max_q, opt / max_q};
}

// ---------------------------------------------------------------------------
// Joint impossibility calculators.
//   alpha_ub = beta0 - (eps*delta - (15/4) eps^3)^3 / 76        (clamped at beta0)
//   beta_ub  = 1 - (1 - eps)(delta^{delta/(1-delta)} - delta^{1/(1-delta)})
// The refined delta-dependent cubic (3/2) eps^3 (delta + 3/2) sits behind a flag.
// ---------------------------------------------------------------------------

struct ImpossibilityPoint {
  double eps;
  double delta;
  double alpha_ub;
  double beta_ub;
  double beta0;
};

inline ImpossibilityPoint impossibility_bounds(double eps, double delta,
                                               bool refined_cubic = false) {
  if (eps < 0.0 || eps > 0.125) throw std::domain_error("impossibility_bounds: eps outside [0, 1/8]");
  if (!(delta > 0.0) || delta > 1.0) throw std::domain_error("impossibility_bounds: delta outside (0, 1]");
  const double b0 = beta_limit();
  const double penalty_inner =
      refined_cubic ? eps * delta - 1.5 * eps * eps * eps * (delta + 1.5)
                  : eps * delta - 3.75 * eps * eps * eps;
  double alpha_ub = b0 - penalty_inner * penalty_inner * penalty_inner / 76.0;
  if (alpha_ub > b0) alpha_ub = b0;  // negative cubic means the bound is vacuous
  double gap;
  if (delta == 1.0) {
    gap = 0.0;  // both powers tend to 1/e
  } else {
    const double ld = std::log(delta);
    gap = std::exp(delta * ld / (1.0 - delta)) - std::exp(ld / (1.0 - delta));
  }
  const double beta_ub = 1.0 - (1.0 - eps) * gap;
  return {eps, delta, alpha_ub, beta_ub, b0};
}

// Envelope over a parameter grid: for each attained beta_ub target, the
// smallest alpha_ub among grid points whose beta_ub is no larger. Sorted by
// beta_ub; enlarging the grid can only lower the envelope.
inline std::vector<ImpossibilityPoint> impossibility_frontier(
    const std::vector<double>& eps_grid, const std::vector<double>& delta_grid,
    bool refined_cubic = false) {
  if (eps_grid.empty() || delta_grid.empty()) {
    throw std::invalid_argument("impossibility_frontier: empty grid");
  }
  std::vector<ImpossibilityPoint> pts;
  pts.reserve(eps_grid.size() * delta_grid.size());
  for (double e : eps_grid) {
    for (double d : delta_grid) pts.push_back(impossibility_bounds(e, d, refined_cubic));
  }
  std::sort(pts.begin(), pts.end(),
            [](const ImpossibilityPoint& a, const ImpossibilityPoint& b) {
              return a.beta_ub < b.beta_ub;
            });
  std::vector<ImpossibilityPoint> out;
  out.reserve(pts.size());
  ImpossibilityPoint best = pts.front();
  for (const auto& p : pts) {
    if (p.alpha_ub < best.alpha_ub) best = p;
    out.push_back({best.eps, best.delta, best.alpha_ub, p.beta_ub, p.beta0});
  }
  return out;
}

}  // namespace stopsim::kertz

namespace stopsim::dist {

namespace detail {

class Boosted final : public Impl {
 public:
  Boosted(ValueDistribution base, double n, double b, double boost, double high_rate,
          double high_value)
      : base_(std::move(base)), n_(n), b_(b), boost_(boost), hv_(high_value) {
    m_high_ = high_rate / n;
    fb_ = base_.cdf(b_);
    m_tail_ = boost_ * (1.0 - fb_);
    if (m_tail_ + m_high_ > 1.0) {
      throw std::invalid_argument("boosted_adversary: scaled masses exceed 1");
    }
    if (!(fb_ > 0.0)) throw std::invalid_argument("boosted_adversary: no mass below b");
    low_scale_ = (1.0 - m_tail_ - m_high_) / fb_;
  }

  double cdf(double x) const override {
    if (x < 0.0) return 0.0;
    if (x >= hv_) return 1.0;
    if (x < b_) return low_scale_ * base_.cdf(x);
    return 1.0 - m_high_ - boost_ * (1.0 - base_.cdf(x));
  }

  double quantile(double u) const override {
    const double split = 1.0 - m_tail_ - m_high_;
    if (u <= split) return base_.quantile(std::min(1.0, u / low_scale_));
    if (u > 1.0 - m_high_) return hv_;
    const double ftarget = 1.0 - (1.0 - m_high_ - u) / boost_;
    return base_.quantile(std::clamp(ftarget, 0.0, 1.0));
  }

  double tail_integral(double v) const override {
    if (v < 0.0) return -v + tail_integral(0.0);
    if (v >= hv_) return 0.0;
    if (v >= b_) return m_high_ * (hv_ - v) + boost_ * base_.tail_integral(v);
    const double at_b = m_high_ * (hv_ - b_) + boost_ * base_.tail_integral(b_);
    return (b_ - v) * (1.0 - low_scale_) +
           low_scale_ * (base_.tail_integral(v) - base_.tail_integral(b_)) + at_b;
  }

  double lower() const override { return 0.0; }
  double upper() const override { return m_high_ > 0.0 ? hv_ : base_.upper(); }
  std::vector<Atom> atoms() const override {
    std::vector<Atom> out;
    for (auto a : base_.atoms()) {
      out.push_back({a.x, (a.x < b_ ? low_scale_ : boost_) * a.mass});
    }
    if (m_high_ > 0.0) out.push_back({hv_, m_high_});
    return out;
  }
  std::string describe() const override {
    return "boosted(b=" + std::to_string(b_) + ",boost=" + std::to_string(boost_) +
           ",high_rate=" + std::to_string(m_high_ * n_) + ",high_value=" + std::to_string(hv_) +
           ",base=" + base_.describe() + ")";
  }

 private:
  ValueDistribution base_;
  double n_, b_, boost_, hv_;
  double m_high_, fb_, m_tail_, low_scale_;
};

}  // namespace detail

// The modified adversarial law: identical to the instance below b, tail mass
// above b scaled by `boost` (the sub-b region renormalized to compensate),
// plus per-arrival mass high_rate/n at high_value.
inline ValueDistribution boosted_adversary(const kertz::HardInstance& inst, double b,
                                           double boost, double high_rate, double high_value) {
  if (!(b > 0.0) || !(b < inst.r_star().front_value())) {
    throw std::invalid_argument("boosted_adversary: b outside (0, r*(0))");
  }
  if (!(boost >= 1.0)) throw std::invalid_argument("boosted_adversary: boost must be >= 1");
  if (high_rate < 0.0) throw std::invalid_argument("boosted_adversary: high_rate negative");
  if (high_rate > 0.0 && !(high_value > inst.big_h())) {
    throw std::invalid_argument("boosted_adversary: high_value must exceed H");
  }
  return ValueDistribution(std::make_shared<detail::Boosted>(
      inst.distribution(), inst.n(), b, boost, high_rate,
      high_rate > 0.0 ? high_value : inst.big_h() + 1.0));
}

}  // namespace stopsim::dist
