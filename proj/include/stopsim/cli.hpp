#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stopsim/harness.hpp"
#include "stopsim/parse.hpp"
#include "stopsim/report.hpp"

namespace stopsim::cli {

struct ExperimentConfig {
  std::string command;
  std::string dist = "exponential(rate=1)";
  std::string advice;  // empty: advice equals dist
  std::string policy = "threephase(gamma=0.25)";
  std::string model = "poisson";
  double gamma = std::nan("");
  std::string gammas;  // resolved comma list for frontier
  double z = 50.0;
  double rate = 200.0;
  std::uint64_t n = 200;
  double q = 1e-3;
  double eps = 0.125;
  double delta = 0.5;
  double c = 2.0;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  std::string mode = "theory";
  bool limit = false;
  bool grids = false;
  int grid = 0;
  std::string cubic_form = "uniform";
  std::uint64_t lprime_max = 0;
  std::string direction = "poisson-to-n";
  std::string out;
  std::string format = "csv";
  std::uint64_t threads = 0;
};

namespace detail {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"frontier", "simulate",  "kertz",
                                              "hard-instance", "bounds", "dominance",
                                              "reduce",   "smoothness"};
  return names;
}

inline std::size_t resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return static_cast<std::size_t>(cfg.threads);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

inline std::string join_numbers(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += report::fmt_double(xs[i]);
    if (i + 1 < xs.size()) out += ",";
  }
  return out;
}

inline std::vector<double> resolved_gammas(const ExperimentConfig& cfg) {
  if (!std::isnan(cfg.gamma)) return {cfg.gamma};
  if (!cfg.gammas.empty()) return parse_number_list(cfg.gammas);
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(num::kInvE * i / 19.0);
  return grid;
}

inline void apply_config_json(const nlohmann::json& j, ExperimentConfig& cfg) {
  for (const auto& [key, value] : j.items()) {
    if (key == "command") cfg.command = value.get<std::string>();
    else if (key == "dist") cfg.dist = value.get<std::string>();
    else if (key == "advice") cfg.advice = value.get<std::string>();
    else if (key == "policy") cfg.policy = value.get<std::string>();
    else if (key == "model") cfg.model = value.get<std::string>();
    else if (key == "gamma") cfg.gamma = value.get<double>();
    else if (key == "gammas") cfg.gammas = value.get<std::string>();
    else if (key == "z") cfg.z = value.get<double>();
    else if (key == "rate") cfg.rate = value.get<double>();
    else if (key == "n") cfg.n = value.get<std::uint64_t>();
    else if (key == "q") cfg.q = value.get<double>();
    else if (key == "eps") cfg.eps = value.get<double>();
    else if (key == "delta") cfg.delta = value.get<double>();
    else if (key == "c") cfg.c = value.get<double>();
    else if (key == "trials") cfg.trials = value.get<std::uint64_t>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "mode") cfg.mode = value.get<std::string>();
    else if (key == "limit") cfg.limit = value.get<bool>();
    else if (key == "grids") cfg.grids = value.get<bool>();
    else if (key == "grid") cfg.grid = value.get<int>();
    else if (key == "cubic_form") cfg.cubic_form = value.get<std::string>();
    else if (key == "lprime_max") cfg.lprime_max = value.get<std::uint64_t>();
    else if (key == "direction") cfg.direction = value.get<std::string>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  if (cfg.command == "frontier") {
    j["mode"] = cfg.mode;
    j["gammas"] = join_numbers(resolved_gammas(cfg));
    if (cfg.mode == "empirical") {
      j["dist"] = cfg.dist;
      j["z"] = cfg.z;
      j["rate"] = cfg.rate;
      j["trials"] = cfg.trials;
    }
  } else if (cfg.command == "simulate") {
    j["policy"] = cfg.policy;
    j["dist"] = cfg.dist;
    j["advice"] = cfg.advice.empty() ? cfg.dist : cfg.advice;
    j["model"] = cfg.model;
    j["rate"] = cfg.rate;
    j["n"] = cfg.n;
    j["z"] = cfg.z;
    j["trials"] = cfg.trials;
  } else if (cfg.command == "kertz") {
    j["limit"] = cfg.limit;
    j["grids"] = cfg.grids;
    j["n"] = cfg.n;
    j["q"] = cfg.q;
  } else if (cfg.command == "hard-instance") {
    j["n"] = cfg.n;
    j["q"] = cfg.q;
    j["trials"] = cfg.trials;
  } else if (cfg.command == "bounds") {
    j["eps"] = cfg.eps;
    j["delta"] = cfg.delta;
    j["grid"] = cfg.grid;
    j["cubic_form"] = cfg.cubic_form;
  } else if (cfg.command == "dominance") {
    j["gamma"] = std::isnan(cfg.gamma) ? 0.25 : cfg.gamma;
    j["dist"] = cfg.dist;
    j["z"] = cfg.z;
    j["rate"] = cfg.rate;
    j["lprime_max"] = cfg.lprime_max;
    j["trials"] = cfg.trials;
  } else if (cfg.command == "reduce") {
    j["direction"] = cfg.direction;
    j["dist"] = cfg.dist;
    j["policy"] = cfg.policy;
    j["n"] = cfg.n;
    j["eps"] = cfg.eps;
    j["trials"] = cfg.trials;
  } else if (cfg.command == "smoothness") {
    j["rate"] = cfg.rate;
    j["c"] = cfg.c;
    j["trials"] = cfg.trials;
  }
  return j;
}

inline std::string ratio_row_suffix_header() {
  return "alg_mean,max_mean,ratio,std_err,match_prob,match_std_err,trials,seed";
}

inline void append_ratio_fields(std::vector<std::string>& row, const harness::RatioEstimate& e) {
  using report::fmt_double;
  row.push_back(fmt_double(e.alg_mean));
  row.push_back(fmt_double(e.max_mean));
  row.push_back(fmt_double(e.ratio));
  row.push_back(fmt_double(e.std_err));
  row.push_back(fmt_double(e.match_prob));
  row.push_back(fmt_double(e.match_std_err));
  row.push_back(std::to_string(e.trials));
  row.push_back(std::to_string(e.seed));
}

inline report::Table run_frontier(const ExperimentConfig& cfg) {
  report::Table t;
  t.header = {"gamma", "tau1", "tau2", "alpha", "beta", "alpha_stderr", "beta_stderr",
              "trials", "seed"};
  std::vector<harness::FrontierPoint> pts;
  const auto grid = resolved_gammas(cfg);
  if (cfg.mode == "theory") {
    pts = harness::frontier_theory_sweep(grid);
  } else if (cfg.mode == "empirical") {
    pts = harness::frontier_empirical_sweep(grid, cfg.z, parse::parse_distribution(cfg.dist),
                                            cfg.rate, cfg.trials, cfg.seed,
                                            resolve_threads(cfg));
  } else {
    throw std::invalid_argument("frontier: mode must be theory or empirical");
  }
  using report::fmt_double;
  for (const auto& p : pts) {
    t.rows.push_back({fmt_double(p.gamma), fmt_double(p.tau1), fmt_double(p.tau2),
                      fmt_double(p.alpha), fmt_double(p.beta), fmt_double(p.alpha_stderr),
                      fmt_double(p.beta_stderr), std::to_string(p.trials),
                      std::to_string(p.seed)});
  }
  return t;
}

inline report::Table run_simulate(const ExperimentConfig& cfg) {
  const auto d = parse::parse_distribution(cfg.dist);
  const auto advice = cfg.advice.empty() ? d : parse::parse_distribution(cfg.advice);
  parse::PolicyContext ctx;
  ctx.d = d;
  ctx.advice = advice;
  ctx.rate = cfg.rate;
  ctx.n = static_cast<std::size_t>(cfg.n);
  ctx.z = cfg.z;
  const auto pol = parse::parse_policy(cfg.policy, ctx);
  harness::Model model;
  if (cfg.model == "poisson") model = harness::Model::poisson(cfg.rate);
  else if (cfg.model == "fixed") model = harness::Model::fixed(static_cast<std::size_t>(cfg.n));
  else throw std::invalid_argument("simulate: model must be poisson or fixed");
  const auto est =
      harness::estimate_ratio(*pol, d, model, cfg.trials, cfg.seed, resolve_threads(cfg));
  report::Table t;
  t.header = {"policy", "dist", "advice", "model", "alg_mean", "max_mean", "ratio",
              "std_err", "match_prob", "match_std_err", "trials", "seed"};
  std::vector<std::string> row{pol->describe(), d.describe(), advice.describe(), cfg.model};
  append_ratio_fields(row, est);
  t.rows.push_back(std::move(row));
  return t;
}

inline report::Table run_kertz(const ExperimentConfig& cfg) {
  report::Table t;
  using report::fmt_double;
  if (cfg.grids) {
    const auto inst = kertz::build_hard_instance(static_cast<double>(cfg.n), cfg.q);
    t.header = {"t", "y_tilde", "r_star"};
    const auto& nodes = inst.y_tilde().nodes();
    const auto& yv = inst.y_tilde().values();
    const auto& rv = inst.r_star().values();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      t.rows.push_back({report::fmt_double_sig(nodes[i], 10), report::fmt_double_sig(yv[i], 10),
                        report::fmt_double_sig(rv[i], 10)});
    }
    return t;
  }
  t.header = {"n", "beta"};
  if (cfg.limit) {
    t.rows.push_back({"inf", fmt_double(kertz::beta_limit())});
  } else {
    t.rows.push_back({std::to_string(cfg.n), fmt_double(kertz::beta_n(static_cast<double>(cfg.n)))});
  }
  return t;
}

inline report::Table run_hard_instance(const ExperimentConfig& cfg) {
  const auto rep = harness::hard_instance_experiment(static_cast<double>(cfg.n), cfg.q,
                                                     cfg.trials, cfg.seed, resolve_threads(cfg));
  report::Table t;
  using report::fmt_double;
  t.header = {"n", "q", "beta_n", "beta0", "opt_q", "max_q", "analytic_ratio", "mc_ratio",
              "mc_std_err", "curve_max_dev", "trials", "seed"};
  t.rows.push_back({fmt_double(rep.n), fmt_double(rep.q), fmt_double(rep.beta_n),
                    fmt_double(rep.beta0), fmt_double(rep.analytic.opt_q),
                    fmt_double(rep.analytic.max_q), fmt_double(rep.analytic.ratio),
                    fmt_double(rep.mc.ratio), fmt_double(rep.mc.std_err),
                    fmt_double(rep.curve_max_dev), std::to_string(rep.mc.trials),
                    std::to_string(rep.mc.seed)});
  return t;
}

inline report::Table run_bounds(const ExperimentConfig& cfg) {
  const bool refined = cfg.cubic_form == "refined";
  if (!refined && cfg.cubic_form != "uniform") {
    throw std::invalid_argument("bounds: cubic_form must be uniform or refined");
  }
  report::Table t;
  t.header = {"eps", "delta", "alpha_ub", "beta_ub", "beta0"};
  using report::fmt_double;
  auto push = [&](const kertz::ImpossibilityPoint& p) {
    t.rows.push_back({fmt_double(p.eps), fmt_double(p.delta), fmt_double(p.alpha_ub),
                      fmt_double(p.beta_ub), fmt_double(p.beta0)});
  };
  if (cfg.grid > 0) {
    std::vector<double> eg, dg;
    for (int i = 0; i < cfg.grid; ++i) {
      eg.push_back(0.125 * i / std::max(1, cfg.grid - 1));
      dg.push_back(static_cast<double>(i + 1) / cfg.grid);
    }
    for (const auto& p : kertz::impossibility_frontier(eg, dg, refined)) push(p);
  } else {
    push(kertz::impossibility_bounds(cfg.eps, cfg.delta, refined));
  }
  return t;
}

inline report::Table run_dominance(const ExperimentConfig& cfg) {
  const double gamma = std::isnan(cfg.gamma) ? 0.25 : cfg.gamma;
  const auto d = parse::parse_distribution(cfg.dist);
  const std::size_t ell = static_cast<std::size_t>(std::llround(cfg.z)) + 2;
  const std::size_t lmax = cfg.lprime_max == 0 ? ell : static_cast<std::size_t>(cfg.lprime_max);
  const auto pts = harness::dominance_profile(gamma, cfg.z, d, cfg.rate, cfg.trials, lmax,
                                              cfg.seed, resolve_threads(cfg));
  report::Table t;
  t.header = {"lprime", "p_alg", "p_max"};
  for (const auto& p : pts) {
    t.rows.push_back({std::to_string(p.lprime), report::fmt_double(p.p_alg),
                      report::fmt_double(p.p_max)});
  }
  return t;
}

inline report::Table run_reduce(const ExperimentConfig& cfg) {
  const auto d = parse::parse_distribution(cfg.dist);
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  const auto threads = resolve_threads(cfg);
  report::Table t;
  t.header = {"direction", "n",           "eps",   "lambda",        "inner_ratio",
              "wrapped_ratio", "wrapped_std_err", "bound", "trials", "seed"};
  using report::fmt_double;
  if (cfg.direction == "poisson-to-n") {
    // n-arrival oracle driven by windowed Poisson arrivals at rate eps*n
    const double eps = cfg.eps;
    const auto padded = arrivals::window_padded_law(d, eps);
    auto [dp, values] = policies::dp_optimal_n_policy(padded, n);
    const double inner_ratio = values.back() / dist::expected_max_n(padded, n);
    const auto wrapped = arrivals::poisson_from_n_adapter(dp, eps, n);
    const double lambda = eps * static_cast<double>(n);
    const auto est = harness::estimate_ratio(*wrapped, d, harness::Model::poisson(lambda),
                                             cfg.trials, cfg.seed, threads);
    t.rows.push_back({cfg.direction, std::to_string(n), fmt_double(eps), fmt_double(lambda),
                      fmt_double(inner_ratio), fmt_double(est.ratio), fmt_double(est.std_err),
                      fmt_double(inner_ratio * (1.0 - eps / 2.0)), std::to_string(est.trials),
                      std::to_string(est.seed)});
  } else if (cfg.direction == "n-to-poisson") {
    const double eps = std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
    const double lambda = static_cast<double>(n) * (1.0 - eps);
    parse::PolicyContext ctx;
    ctx.d = d;
    ctx.rate = lambda;
    ctx.n = n;
    ctx.z = cfg.z;
    const auto inner = parse::parse_policy(cfg.policy.empty() ? "clairvoyant" : cfg.policy, ctx);
    const auto inner_est = harness::estimate_ratio(*inner, d, harness::Model::poisson(lambda),
                                                   cfg.trials, cfg.seed, threads);
    const auto wrapped = arrivals::n_from_poisson_adapter(inner, n);
    const auto est = harness::estimate_ratio(*wrapped, d, harness::Model::fixed(n), cfg.trials,
                                             cfg.seed, threads);
    t.rows.push_back({cfg.direction, std::to_string(n), fmt_double(eps), fmt_double(lambda),
                      fmt_double(inner_est.ratio), fmt_double(est.ratio), fmt_double(est.std_err),
                      fmt_double(inner_est.ratio - 4.0 * eps), std::to_string(est.trials),
                      std::to_string(est.seed)});
  } else {
    throw std::invalid_argument("reduce: direction must be poisson-to-n or n-to-poisson");
  }
  return t;
}

inline report::Table run_smoothness(const ExperimentConfig& cfg) {
  const auto rep =
      harness::smoothness_demo(cfg.rate, cfg.c, cfg.trials, cfg.seed, resolve_threads(cfg));
  report::Table t;
  t.header = {"policy", "ratio", "std_err", "match_prob", "tv_distance", "trials", "seed"};
  for (const auto& [name, est] : rep.rows) {
    t.rows.push_back({name, report::fmt_double(est.ratio), report::fmt_double(est.std_err),
                      report::fmt_double(est.match_prob), report::fmt_double(rep.tv_distance),
                      std::to_string(est.trials), std::to_string(est.seed)});
  }
  return t;
}

}  // namespace detail

inline int dispatch(const ExperimentConfig& cfg) {
  report::Table table;
  try {
    if (cfg.command == "frontier") table = detail::run_frontier(cfg);
    else if (cfg.command == "simulate") table = detail::run_simulate(cfg);
    else if (cfg.command == "kertz") table = detail::run_kertz(cfg);
    else if (cfg.command == "hard-instance") table = detail::run_hard_instance(cfg);
    else if (cfg.command == "bounds") table = detail::run_bounds(cfg);
    else if (cfg.command == "dominance") table = detail::run_dominance(cfg);
    else if (cfg.command == "reduce") table = detail::run_reduce(cfg);
    else if (cfg.command == "smoothness") table = detail::run_smoothness(cfg);
    else {
      std::cerr << "error: unknown command '" << cfg.command << "'\n";
      return 2;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 1;
  }

  const auto echo = detail::config_echo(cfg);
  std::ostringstream body;
  if (cfg.format == "csv") report::write_csv(body, table, echo);
  else if (cfg.format == "json") report::write_json(body, table, echo);
  else {
    std::cerr << "error: format must be csv or json\n";
    return 2;
  }
  if (cfg.out.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot open output file '" << cfg.out << "'\n";
      return 2;
    }
    f << body.str();
  }
  return 0;
}

inline int run_cli(int argc, const char* const* argv) {
  ExperimentConfig cfg;

  // config file first, flags override
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream f(argv[i + 1]);
      if (!f) {
        std::cerr << "error: cannot read config file '" << argv[i + 1] << "'\n";
        return 2;
      }
      try {
        nlohmann::json j = nlohmann::json::parse(f);
        if (j.contains("config")) j = j["config"];
        detail::apply_config_json(j, cfg);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App app{"stopping-rule simulation and frontier toolkit"};
  std::string config_path;
  app.add_option("command", cfg.command,
                 "one of: frontier simulate kertz hard-instance bounds dominance reduce "
                 "smoothness");
  app.add_option("--config", config_path, "JSON config file; explicit flags override it");
  app.add_option("--dist", cfg.dist, "true value distribution, e.g. uniform(a=0,b=1)");
  app.add_option("--advice", cfg.advice, "advice distribution (defaults to --dist)");
  app.add_option("--policy", cfg.policy, "policy spec, e.g. threephase(gamma=0.25,z=50)");
  app.add_option("--model", cfg.model, "arrival model: poisson or fixed");
  app.add_option("--gamma", cfg.gamma, "secretary-guarantee parameter in [0, 1/e]");
  app.add_option("--gammas", cfg.gammas, "comma list of gamma values for frontier sweeps");
  app.add_option("--z", cfg.z, "warmup length in time units");
  app.add_option("--rate", cfg.rate, "Poisson arrival rate");
  app.add_option("--n", cfg.n, "arrival count / instance rate parameter");
  app.add_option("--q", cfg.q, "early-window parameter of the adversarial instance");
  app.add_option("--eps", cfg.eps, "epsilon parameter (bounds, reduce)");
  app.add_option("--delta", cfg.delta, "delta parameter (bounds)");
  app.add_option("--c", cfg.c, "effective rate of the nonzero part (smoothness)");
  app.add_option("--trials", cfg.trials, "Monte Carlo trials");
  app.add_option("--seed", cfg.seed, "master seed; all sampling derives from it");
  app.add_option("--mode", cfg.mode, "frontier mode: theory or empirical");
  app.add_flag("--limit", cfg.limit, "kertz: report the large-rate limit constant");
  app.add_flag("--grids", cfg.grids, "kertz: export the instance curves as CSV");
  app.add_option("--grid", cfg.grid, "bounds: N for an NxN parameter scan");
  app.add_option("--cubic-form", cfg.cubic_form, "bounds penalty form: uniform or refined");
  app.add_option("--lprime-max", cfg.lprime_max, "dominance: largest rank to report");
  app.add_option("--direction", cfg.direction, "reduce: poisson-to-n or n-to-poisson");
  app.add_option("--out", cfg.out, "output path (default stdout)");
  app.add_option("--format", cfg.format, "output format: csv or json");
  app.add_option("--threads", cfg.threads, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (cfg.command.empty()) {
    std::cerr << app.help() << "\n";
    return 2;
  }
  bool known = false;
  for (const auto& name : detail::command_names()) known = known || name == cfg.command;
  if (!known) {
    std::cerr << "error: unknown command '" << cfg.command << "'\n";
    return 2;
  }
  return dispatch(cfg);
}

}  // namespace stopsim::cli
