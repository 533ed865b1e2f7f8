#include "cli_app.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "majority/cavity.hpp"
#include "majority/cltcheck.hpp"
#include "majority/dynamics.hpp"
#include "majority/graphs.hpp"
#include "majority/lowerbound.hpp"
#include "majority/montecarlo.hpp"
#include "majority/upperbound.hpp"

namespace majority {

namespace {

constexpr const char* kVersion = "1.0.0";

// Files written by the running subcommand; each gets a digest in the manifest.
struct Outputs {
  std::vector<std::string> files;
  nlohmann::json extra = nlohmann::json::object();

  void write(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    if (path.empty() || path == "-") {
      fn(std::cout);
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot open output file " + path);
    fn(out);
    out.close();
    files.push_back(path);
  }
};

nlohmann::json collect_params(const CLI::App* sub) {
  nlohmann::json p = nlohmann::json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name == "manifest") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
    }
    p[name] = value;
  }
  return p;
}

void emit_manifest(const CLI::App* sub, const Outputs& outs, std::uint64_t seed, double wall,
                   const std::string& manifest_path) {
  nlohmann::json m;
  m["command"] = sub->get_name();
  m["params"] = collect_params(sub);
  m["seed"] = seed;
  m["version"] = kVersion;
  m["wall_time_seconds"] = wall;
  m["outputs"] = nlohmann::json::object();
  for (const auto& f : outs.files) m["outputs"][f] = file_digest(f);
  if (!outs.extra.empty()) m["result"] = outs.extra;
  const std::string text = m.dump(2) + "\n";
  std::string path = manifest_path;
  if (path.empty() && !outs.files.empty()) path = outs.files.front() + ".manifest.json";
  if (path.empty()) {
    std::cerr << text;
    return;
  }
  std::ofstream(path, std::ios::binary) << text;
}

std::vector<Side> parse_sides(const std::string& s) {
  std::vector<Side> out;
  for (char c : s) {
    switch (c) {
      case 'P': case 'p': case '0': out.push_back(Side::Pinned); break;
      case '+': out.push_back(Side::Plus); break;
      case '-': out.push_back(Side::Minus); break;
      case 'F': case 'f': out.push_back(Side::Free); break;
      default: throw UsageError(std::string("unknown side '") + c + "', expected P, +, - or F");
    }
  }
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Majority dynamics on regular graphs: simulation, cavity kernels and threshold bounds"};
  app.set_config("--config", "", "TOML/INI file; command-line flags take precedence");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_path, manifest_path;
  Outputs outs;
  std::function<void()> action;

  auto common = [&](CLI::App* sub, bool with_seed = true) {
    sub->option_defaults()->always_capture_default();
    if (with_seed) sub->add_option("--seed", seed, "random seed");
    sub->add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_path, "output CSV path ('-' for stdout)");
    sub->add_option("--manifest", manifest_path, "manifest path (default <out>.manifest.json)");
  };

  // kernels
  int k_tmax = 4;
  double k_acc = 1e-5;
  std::string k_json;
  auto* kernels = app.add_subcommand("kernels", "correlation and response kernels of the cavity process");
  kernels->add_option("--tmax", k_tmax, "largest time index")->check(CLI::Range(1, 12));
  kernels->add_option("--accuracy", k_acc, "target integration std-error per entry");
  kernels->add_option("--json", k_json, "also save the kernels as JSON");
  common(kernels);
  kernels->callback([&] {
    action = [&] {
      const CavityKernels K = compute_kernels(k_tmax, k_acc, seed, threads);
      outs.write(out_path, [&](std::ostream& o) { write_kernels_csv(o, K); });
      if (!k_json.empty()) {
        save_kernels_json(k_json, K);
        outs.files.push_back(k_json);
      }
    };
  });

  // simulate
  std::string s_graph = "random", s_init = "iid", s_field;
  int s_k = 3, s_depth = 6, s_horizon = 20;
  std::uint32_t s_n = 1000;
  double s_theta = 0.0;
  long s_trials = 0;
  bool s_antithetic = false;
  auto* simulate = app.add_subcommand("simulate", "run the majority process, or a tree bias curve with --trials");
  simulate->add_option("--graph", s_graph, "random, tree or rooted")->check(CLI::IsMember({"random", "tree", "rooted"}));
  simulate->add_option("--k", s_k, "degree")->check(CLI::Range(2, 1000));
  simulate->add_option("--n", s_n, "vertices (random graph)");
  simulate->add_option("--depth", s_depth, "tree depth")->check(CLI::Range(0, 40));
  simulate->add_option("--horizon", s_horizon, "number of steps")->check(CLI::Range(0, 100000));
  simulate->add_option("--theta", s_theta, "initial bias")->check(CLI::Range(-1.0, 1.0));
  simulate->add_option("--init", s_init, "count or iid")->check(CLI::IsMember({"count", "iid"}));
  simulate->add_option("--field", s_field, "rooted tree field sequence, comma separated +-1/0");
  simulate->add_option("--trials", s_trials, "bias-curve trials on a full tree (0: single run)");
  simulate->add_flag("--antithetic", s_antithetic, "antithetic initial draws in bias-curve mode");
  common(simulate);
  simulate->callback([&] {
    action = [&] {
      if (s_trials > 0) {
        if (s_graph != "tree") throw UsageError("bias curves need --graph tree");
        const BiasCurve c = bias_curve(s_k, s_theta, s_depth, std::min(s_horizon, s_depth), s_trials, seed, s_antithetic);
        outs.write(out_path, [&](std::ostream& o) { write_bias_curve_csv(o, c); });
        return;
      }
      RegularGraph g;
      if (s_graph == "random")
        g = sample_random_regular(s_n, s_k, RandomSeed{seed, 1});
      else
        g = build_tree(s_k, s_depth, s_graph == "rooted");
      const InitMode mode = s_init == "count" ? InitMode::Count : InitMode::Iid;
      const SpinConfiguration init = initial_configuration(g.n(), s_theta, mode, RandomSeed{seed, 2});
      std::optional<FieldSequence> u;
      if (!s_field.empty()) {
        if (s_graph != "rooted") throw UsageError("--field needs --graph rooted");
        FieldSequence f;
        std::stringstream ss(s_field);
        for (std::string tok; std::getline(ss, tok, ',');) f.push_back(std::stoi(tok));
        u = f;
      }
      const RunResult r = run(g, init, s_horizon, TieBreakTape(RandomSeed{seed, 3}), u);
      outs.write(out_path, [&](std::ostream& o) { write_trajectory_csv(o, r.trajectory); });
      outs.extra = nlohmann::json::parse(outcome_json(r.outcome));
    };
  });

  // threshold
  ThresholdParams tp;
  std::string t_init = "count";
  auto* threshold = app.add_subcommand("threshold", "empirical consensus threshold on random regular graphs");
  threshold->add_option("--k", tp.k, "degree")->check(CLI::Range(2, 1000));
  threshold->add_option("--n", tp.n, "vertices");
  threshold->add_option("--trials", tp.trials, "independent graphs")->check(CLI::PositiveNumber);
  threshold->add_option("--tol", tp.bisect_tol, "bisection tolerance on theta");
  threshold->add_option("--init", t_init, "count or iid")->check(CLI::IsMember({"count", "iid"}));
  threshold->add_option("--cap", tp.horizon_cap, "step cap per run (-1: 4 log2 n + 50)");
  threshold->add_option("--grid", tp.grid, "theta values for the success curve")->delimiter(',');
  common(threshold);
  threshold->callback([&] {
    action = [&] {
      tp.seed = seed;
      tp.threads = threads;
      tp.init = t_init == "count" ? InitMode::Count : InitMode::Iid;
      const ThresholdEstimate est = estimate_threshold(tp);
      outs.write(out_path, [&](std::ostream& o) { write_success_curve_csv(o, est); });
      outs.extra = nlohmann::json::parse(threshold_metadata_json(est, seed));
      for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
      std::cerr << std::setprecision(4) << "theta_hat=" << est.theta_hat << " +- " << est.ci_halfwidth << '\n';
    };
  });

  // predict
  int p_k = 20, p_tstar = 1, p_depth = -1;
  double p_omega0 = 0.5, p_acc = 1e-4;
  long p_trials = 100000;
  std::string p_cache;
  auto* predict = app.add_subcommand("predict", "biased-initialization prediction merged with a tree simulation");
  predict->add_option("--k", p_k, "degree")->check(CLI::Range(2, 1000));
  predict->add_option("--tstar", p_tstar, "T*")->check(CLI::Range(0, 8));
  predict->add_option("--omega0", p_omega0, "rescaled initial bias")->check(CLI::NonNegativeNumber);
  predict->add_option("--accuracy", p_acc, "integration accuracy");
  predict->add_option("--trials", p_trials, "simulation trials")->check(CLI::Range(2L, 1000000000L));
  predict->add_option("--depth", p_depth, "simulation tree depth (-1: T*+2)");
  predict->add_option("--kernels-json", p_cache, "kernel cache file");
  common(predict);
  predict->callback([&] {
    action = [&] {
      const CavityKernels K = p_cache.empty() ? compute_kernels(p_tstar + 1, p_acc, seed, threads)
                                              : cached_kernels(p_cache, p_tstar + 1, p_acc, seed);
      const BiasPrediction b = predict_bias(p_k, p_tstar, p_omega0, K, p_acc, seed);
      const int horizon = p_tstar + 2;
      const int depth = p_depth < 0 ? horizon : p_depth;
      const double theta0 = p_omega0 * std::pow(static_cast<double>(p_k), -(p_tstar + 1) / 2.0);
      const BiasCurve sim = bias_curve(p_k, theta0, depth, horizon, p_trials, seed);
      outs.write(out_path, [&](std::ostream& o) {
        o << "t,simulated-mean,simulated-stderr,predicted-mean\n" << std::setprecision(10);
        for (int t = 0; t <= horizon; ++t)
          o << t << ',' << sim.points[t].mean << ',' << sim.points[t].std_error << ',' << b.predicted_mean[t] << '\n';
      });
      outs.extra["theta0"] = theta0;
      outs.extra["omega"] = b.omega;
      outs.extra["predicted_err"] = b.predicted_err;
    };
  });

  // lower-bound
  int l_k = 3, l_T = 0;
  ThetaLbOptions lo;
  bool l_direct = false;
  double l_theta = std::nan("");
  auto* lower = app.add_subcommand("lower-bound", "theta_lb from the alternating-core recursion");
  lower->add_option("--k", l_k, "degree")->check(CLI::Range(3, 64));
  lower->add_option("--T", l_T, "trajectory horizon")->check(CLI::Range(0, 6));
  lower->add_option("--tol", lo.bisect_tol, "bisection tolerance on theta");
  lower->add_option("--dmax", lo.psi.d_max, "iteration cap");
  lower->add_option("--eps-converge", lo.psi.eps_converge, "sup-change convergence threshold");
  lower->add_option("--eps-positive", lo.psi.eps_positive, "positivity margin");
  lower->add_option("--theta", l_theta, "only iterate at this theta and write the tables");
  lower->add_flag("--direct", l_direct, "use the direct update instead of the factorized one");
  common(lower, false);
  lower->callback([&] {
    action = [&] {
      lo.psi.bipartite = !l_direct;
      if (!std::isnan(l_theta)) {
        const ConditionalFamily fam = exact_root_distribution(l_k, l_T, l_theta, lo.exact);
        const PsiTables psi = psi_iterate(fam, lo.psi);
        outs.write(out_path, [&](std::ostream& o) { write_psi_csv(o, psi); });
        outs.extra = {{"d", psi.d},           {"converged", psi.converged},           {"min_odd", psi.min_odd},
                      {"margin", psi.margin}, {"sup_change", psi.sup_change}, {"prev_sup_change", psi.prev_sup_change}};
        return;
      }
      const ThetaLbResult r = theta_lb(l_k, l_T, lo);
      outs.write(out_path, [&](std::ostream& o) {
        o << "k,T,theta_lb,lo,hi,d_used,converged\n" << std::setprecision(8) << r.k << ',' << r.T << ','
          << r.theta_lb << ',' << r.lo << ',' << r.hi << ',' << r.d_used << ',' << (r.converged ? 1 : 0) << '\n';
      });
      outs.extra = {{"theta_lb", r.theta_lb},
                    {"margin", r.margin},
                    {"max_monotone_violation", r.max_monotone_violation},
                    {"max_bound_violation", r.max_bound_violation}};
    };
  });

  // upper-bound
  std::vector<int> u_k{5};
  std::string u_method = "fixed-point";
  BootstrapOptions bo;
  auto* upper = app.add_subcommand("upper-bound", "theta_u from bootstrap percolation on the tree");
  upper->add_option("--k", u_k, "degrees")->delimiter(',')->check(CLI::Range(3, 64));
  upper->add_option("--method", u_method, "fixed-point or simulation")
      ->check(CLI::IsMember({"fixed-point", "simulation"}));
  upper->add_option("--precision", bo.precision, "bisection width on rho");
  upper->add_option("--trials", bo.trials, "simulation trials per depth");
  upper->add_option("--max-vertices", bo.max_tree_vertices, "simulation tree size budget");
  common(upper);
  upper->callback([&] {
    action = [&] {
      const BootstrapMethod m = u_method == "fixed-point" ? BootstrapMethod::FixedPoint : BootstrapMethod::Simulation;
      std::vector<BootstrapResult> rows;
      for (int k : u_k) rows.push_back(bootstrap_rho_c(k, m, bo, seed));
      outs.write(out_path, [&](std::ostream& o) { write_bootstrap_csv(o, rows); });
      for (const auto& r : rows) outs.extra[std::to_string(r.k)] = r.diagnostics;
    };
  });

  // clt-check
  int c_d = 1;
  std::vector<int> c_N{100};
  std::vector<double> c_probs{0.5, 0.5};
  std::vector<long> c_a{0};
  std::string c_sides = "P", c_conv = "01";
  bool c_centered = false;
  double c_B = 0.0, c_acc = 1e-7;
  auto* clt = app.add_subcommand("clt-check", "exact lattice probabilities against the Gaussian slice formula");
  clt->add_option("--d", c_d, "dimension")->check(CLI::Range(1, 3));
  clt->add_option("--N", c_N, "numbers of summands")->delimiter(',');
  clt->add_option("--probs", c_probs, "2^d cell probabilities, bit j = coordinate j")->delimiter(',');
  clt->add_option("--a", c_a, "target lattice point (or offsets with --centered)")->delimiter(',');
  clt->add_flag("--centered", c_centered, "target = round(N * mean) + a in the 0/1 convention");
  clt->add_option("--sides", c_sides, "one of P, +, -, F per coordinate");
  clt->add_option("--B", c_B, "cell lower-bound constant (0: unchecked)");
  clt->add_option("--convention", c_conv, "01 or pm")->check(CLI::IsMember({"01", "pm"}));
  clt->add_option("--accuracy", c_acc, "Gaussian integration std-error");
  common(clt);
  clt->callback([&] {
    action = [&] {
      std::vector<std::pair<LatticeSumSpec, CltComparison>> rows;
      for (int N : c_N) {
        LatticeSumSpec spec;
        spec.d = c_d;
        spec.N = N;
        spec.cell_probs = c_probs;
        spec.partition.side = parse_sides(c_sides);
        spec.B = c_B;
        spec.convention = c_conv == "01" ? LatticeConvention::ZeroOne : LatticeConvention::PlusMinus;
        spec.a = c_a;
        if (c_centered) {
          if (static_cast<int>(c_a.size()) != c_d) throw UsageError("need d offsets");
          spec.convention = LatticeConvention::ZeroOne;
          for (int j = 0; j < c_d; ++j) {
            double mean = 0.0;
            for (std::size_t c = 0; c < c_probs.size(); ++c)
              if ((c >> j) & 1U) mean += c_probs[c];
            spec.a[j] = std::lround(N * mean) + c_a[j];
          }
        }
        SliceOptions so;
        so.target_std_error = c_acc;
        so.seed = seed;
        rows.emplace_back(spec, clt_compare(spec, so));
      }
      outs.write(out_path, [&](std::ostream& o) {
        write_clt_csv_header(o);
        for (const auto& [s, c] : rows) write_clt_csv_row(o, s, c);
      });
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    const auto start = std::chrono::steady_clock::now();
    action();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit_manifest(sub, outs, seed, wall, manifest_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ResourceCapError& e) {
    std::cerr << "resource cap: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace majority
