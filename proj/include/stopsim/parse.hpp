#pragma once

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stopsim/adapters.hpp"
#include "stopsim/distribution.hpp"
#include "stopsim/kertz.hpp"
#include "stopsim/optimal_policy.hpp"
#include "stopsim/policy.hpp"
#include "stopsim/three_phase.hpp"

namespace stopsim::parse {

// Text form `name(key=value,...)`; values are numbers except where a key
// holds a nested spec (the mixture's a= and b=).
struct Spec {
  std::string name;
  std::map<std::string, double> params;
  std::map<std::string, Spec> children;
};

namespace detail {

inline void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

inline std::string read_ident(const std::string& s, std::size_t& i) {
  skip_ws(s, i);
  const std::size_t start = i;
  while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
  if (i == start) throw std::invalid_argument("spec parse: expected identifier in '" + s + "'");
  return s.substr(start, i - start);
}

inline Spec parse_spec(const std::string& s, std::size_t& i);

inline void parse_args(const std::string& s, std::size_t& i, Spec& out) {
  skip_ws(s, i);
  if (i >= s.size() || s[i] != '(') return;  // bare name, no argument list
  ++i;
  skip_ws(s, i);
  if (i < s.size() && s[i] == ')') {
    ++i;
    return;
  }
  for (;;) {
    const std::string key = read_ident(s, i);
    skip_ws(s, i);
    if (i >= s.size() || s[i] != '=') {
      throw std::invalid_argument("spec parse: expected '=' after '" + key + "'");
    }
    ++i;
    skip_ws(s, i);
    // nested spec when the value begins with a letter
    if (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
      out.children.emplace(key, parse_spec(s, i));
    } else {
      const char* begin = s.c_str() + i;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) {
        throw std::invalid_argument("spec parse: bad number for key '" + key + "'");
      }
      i += static_cast<std::size_t>(end - begin);
      out.params.emplace(key, v);
    }
    skip_ws(s, i);
    if (i < s.size() && s[i] == ',') {
      ++i;
      continue;
    }
    if (i < s.size() && s[i] == ')') {
      ++i;
      return;
    }
    throw std::invalid_argument("spec parse: expected ',' or ')' in '" + s + "'");
  }
}

inline Spec parse_spec(const std::string& s, std::size_t& i) {
  Spec out;
  out.name = read_ident(s, i);
  parse_args(s, i, out);
  return out;
}

inline double require(const Spec& sp, const std::string& key) {
  const auto it = sp.params.find(key);
  if (it == sp.params.end()) {
    throw std::invalid_argument(sp.name + ": missing parameter '" + key + "'");
  }
  return it->second;
}

inline double param_or(const Spec& sp, const std::string& key, double fallback) {
  const auto it = sp.params.find(key);
  return it == sp.params.end() ? fallback : it->second;
}

}  // namespace detail

inline Spec parse_spec_text(const std::string& text) {
  std::size_t i = 0;
  Spec out = detail::parse_spec(text, i);
  detail::skip_ws(text, i);
  if (i != text.size()) {
    throw std::invalid_argument("spec parse: trailing input in '" + text + "'");
  }
  return out;
}

// --------------------------------------------------------------------------
// Distributions: uniform(a=,b=), exponential(rate=), pareto(shape=,scale=,
// cap=), zero(), point(v=), hard(n=,q=).
// --------------------------------------------------------------------------

inline dist::ValueDistribution build_distribution(const Spec& sp) {
  using namespace detail;
  if (sp.name == "uniform") return dist::make_uniform(require(sp, "a"), require(sp, "b"));
  if (sp.name == "exponential" || sp.name == "exp") {
    return dist::make_exponential(param_or(sp, "rate", 1.0));
  }
  if (sp.name == "pareto") {
    return dist::make_pareto(require(sp, "shape"), require(sp, "scale"), require(sp, "cap"));
  }
  if (sp.name == "zero") return dist::make_point(0.0);
  if (sp.name == "point") return dist::make_point(require(sp, "v"));
  if (sp.name == "hard") {
    return kertz::build_hard_instance(require(sp, "n"), param_or(sp, "q", 1e-3)).distribution();
  }
  throw std::invalid_argument("unknown distribution family '" + sp.name + "'");
}

inline dist::ValueDistribution parse_distribution(const std::string& text) {
  return build_distribution(parse_spec_text(text));
}

// --------------------------------------------------------------------------
// Policies. Context supplies what the text form leaves implicit: the true
// law (for oracles built without advice), the advice law, and the model
// scale.
// --------------------------------------------------------------------------

struct PolicyContext {
  std::optional<dist::ValueDistribution> d;       // true law
  std::optional<dist::ValueDistribution> advice;  // advice law (defaults to d)
  double rate = 0.0;
  std::size_t n = 0;
  double z = 50.0;
};

inline dist::ValueDistribution context_advice(const PolicyContext& ctx) {
  if (ctx.advice) return *ctx.advice;
  if (ctx.d) return *ctx.d;
  throw std::invalid_argument("policy needs an advice or true distribution");
}

inline policies::PolicyPtr build_policy(const Spec& sp, const PolicyContext& ctx) {
  using namespace detail;
  if (sp.name == "secretary") {
    return policies::secretary_policy(param_or(sp, "cutoff", num::kInvE));
  }
  if (sp.name == "threephase") {
    return policies::three_phase_policy(require(sp, "gamma"), param_or(sp, "z", ctx.z), ctx.rate,
                                        context_advice(ctx));
  }
  if (sp.name == "fixedthreshold") {
    return policies::fixed_quantile_threshold_policy(context_advice(ctx), ctx.rate,
                                                     param_or(sp, "z", ctx.z));
  }
  if (sp.name == "threephase_n") {
    const std::size_t n = static_cast<std::size_t>(param_or(sp, "n", static_cast<double>(ctx.n)));
    return policies::three_phase_n_policy(require(sp, "gamma"), param_or(sp, "z", ctx.z), n,
                                          context_advice(ctx));
  }
  if (sp.name == "optimal") {
    return policies::optimal_poisson_policy(context_advice(ctx), ctx.rate).first;
  }
  if (sp.name == "dp") {
    const std::size_t n = static_cast<std::size_t>(param_or(sp, "n", static_cast<double>(ctx.n)));
    return policies::dp_optimal_n_policy(context_advice(ctx), n).first;
  }
  if (sp.name == "mix") {
    const auto a = sp.children.find("a");
    const auto b = sp.children.find("b");
    if (a == sp.children.end() || b == sp.children.end()) {
      throw std::invalid_argument("mix: needs nested a= and b= policies");
    }
    return policies::mixture_policy(require(sp, "p"), build_policy(a->second, ctx),
                                    build_policy(b->second, ctx));
  }
  if (sp.name == "never") return std::make_shared<policies::NeverAcceptPolicy>();
  if (sp.name == "first") return std::make_shared<policies::AcceptFirstPolicy>();
  if (sp.name == "clairvoyant") return std::make_shared<policies::ClairvoyantMaxPolicy>();
  throw std::invalid_argument("unknown policy '" + sp.name + "'");
}

inline policies::PolicyPtr parse_policy(const std::string& text, const PolicyContext& ctx) {
  return build_policy(parse_spec_text(text), ctx);
}

}  // namespace stopsim::parse
