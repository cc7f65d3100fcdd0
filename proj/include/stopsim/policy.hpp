#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stopsim/arrivals.hpp"
#include "stopsim/rng.hpp"

namespace stopsim::policies {

enum class Decision { reject, accept };

// Per-run state. step() sees arrivals in time order and must not be called
// again once it has accepted.
class PolicyRun {
 public:
  virtual ~PolicyRun() = default;
  virtual Decision step(double time, double value) = 0;

 protected:
  void ensure_live() const {
    if (done_) throw std::logic_error("PolicyRun: step after accept");
  }
  void mark_done() { done_ = true; }

 private:
  bool done_ = false;
};

// seq is an oracle hint for clairvoyant test doubles only; honest policies
// never read it.
struct RunContext {
  RngStream* rng = nullptr;
  const arrivals::ArrivalSequence* seq = nullptr;
};

// Immutable factory; safe to share across concurrent runs. Per-run
// randomness (warmup simulation, mixture coins) comes from the context
// stream handed to start().
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::unique_ptr<PolicyRun> start(const RunContext& ctx) const = 0;
  virtual std::string describe() const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

struct TraceEntry {
  double time;
  double value;
  Decision decision;
};

struct PolicyTrace {
  std::vector<TraceEntry> decisions;
  bool accepted = false;
  double accept_time = 0.0;
  double accept_value = 0.0;
};

struct RunResult {
  double reward = 0.0;
  PolicyTrace trace;
};

inline RunResult run_policy(const Policy& p, const arrivals::ArrivalSequence& seq,
                            RngStream& rng) {
  RunContext ctx{&rng, &seq};
  auto run = p.start(ctx);
  RunResult out;
  for (const auto& e : seq.entries) {
    const Decision d = run->step(e.time, e.value);
    out.trace.decisions.push_back({e.time, e.value, d});
    if (d == Decision::accept) {
      out.trace.accepted = true;
      out.trace.accept_time = e.time;
      out.trace.accept_value = e.value;
      out.reward = e.value;
      break;
    }
  }
  return out;
}

// trace-free variant for hot Monte Carlo loops
inline double run_policy_reward(const Policy& p, const arrivals::ArrivalSequence& seq,
                                RngStream& rng) {
  RunContext ctx{&rng, &seq};
  auto run = p.start(ctx);
  for (const auto& e : seq.entries) {
    if (run->step(e.time, e.value) == Decision::accept) return e.value;
  }
  return 0.0;
}

// --------------------------------------------------------------------------
// Test doubles
// --------------------------------------------------------------------------

class NeverAcceptPolicy final : public Policy {
  class Run final : public PolicyRun {
    Decision step(double, double) override {
      ensure_live();
      return Decision::reject;
    }
  };

 public:
  std::unique_ptr<PolicyRun> start(const RunContext&) const override {
    return std::make_unique<Run>();
  }
  std::string describe() const override { return "never()"; }
};

class AcceptFirstPolicy final : public Policy {
  class Run final : public PolicyRun {
    Decision step(double, double) override {
      ensure_live();
      mark_done();
      return Decision::accept;
    }
  };

 public:
  std::unique_ptr<PolicyRun> start(const RunContext&) const override {
    return std::make_unique<Run>();
  }
  std::string describe() const override { return "first()"; }
};

// Stops on the realized maximum of the run's sequence. Needs the sequence
// oracle, so it is only usable through run_policy / the harness.
class ClairvoyantMaxPolicy final : public Policy {
  class Run final : public PolicyRun {
   public:
    explicit Run(double target) : target_(target) {}
    Decision step(double, double value) override {
      ensure_live();
      if (value == target_ && value > 0.0) {
        mark_done();
        return Decision::accept;
      }
      return Decision::reject;
    }

   private:
    double target_;
  };

 public:
  std::unique_ptr<PolicyRun> start(const RunContext& ctx) const override {
    if (!ctx.seq) throw std::logic_error("ClairvoyantMaxPolicy needs the sequence oracle");
    return std::make_unique<Run>(ctx.seq->max_value());
  }
  std::string describe() const override { return "clairvoyant()"; }
};

// --------------------------------------------------------------------------
// Randomized mixture: pick a with probability p, else b, once per run
// before any arrival is seen.
// --------------------------------------------------------------------------

class MixturePolicy final : public Policy {
 public:
  MixturePolicy(double p, PolicyPtr a, PolicyPtr b) : p_(p), a_(std::move(a)), b_(std::move(b)) {
    if (!(p >= 0.0) || !(p <= 1.0)) throw std::domain_error("mixture: p outside [0,1]");
    if (!a_ || !b_) throw std::invalid_argument("mixture: null component");
  }
  std::unique_ptr<PolicyRun> start(const RunContext& ctx) const override {
    if (p_ == 1.0) return a_->start(ctx);  // degenerate mixtures draw no coin
    if (p_ == 0.0) return b_->start(ctx);
    if (!ctx.rng) throw std::logic_error("mixture needs a random stream");
    const bool pick_a = ctx.rng->uniform() < p_;
    return (pick_a ? a_ : b_)->start(ctx);
  }
  std::string describe() const override {
    return "mix(p=" + std::to_string(p_) + ",a=" + a_->describe() + ",b=" + b_->describe() + ")";
  }

 private:
  double p_;
  PolicyPtr a_, b_;
};

inline PolicyPtr mixture_policy(double p, PolicyPtr a, PolicyPtr b) {
  return std::make_shared<MixturePolicy>(p, std::move(a), std::move(b));
}

}  // namespace stopsim::policies
