#include "majority/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace majority {

std::string to_string(InitMode m) { return m == InitMode::Count ? "count" : "iid"; }

namespace {

// Shared per-trial randomness: a permutation for count mode, uniforms for iid mode.
struct TrialDraws {
  std::vector<std::uint32_t> order;
  std::vector<double> uniforms;
};

TrialDraws draw_trial(std::uint32_t n, InitMode mode, const RandomSeed& seed) {
  TrialDraws d;
  Rng rng(seed);
  if (mode == InitMode::Count) {
    d.order.resize(n);
    std::iota(d.order.begin(), d.order.end(), 0U);
    std::shuffle(d.order.begin(), d.order.end(), rng);
  } else {
    d.uniforms.resize(n);
    for (auto& u : d.uniforms) u = rng.uniform();
  }
  return d;
}

void fill_config(const TrialDraws& d, std::uint32_t n, double theta, InitMode mode, SpinConfiguration& c) {
  c.assign(n, -1);
  if (mode == InitMode::Count) {
    const auto plus = static_cast<std::uint32_t>(std::clamp(std::lround(n * (1.0 + theta) / 2.0), 0L, static_cast<long>(n)));
    for (std::uint32_t i = 0; i < plus; ++i) c[d.order[i]] = 1;
  } else {
    const double p = 0.5 * (1.0 + theta);
    for (std::uint32_t v = 0; v < n; ++v)
      if (d.uniforms[v] < p) c[v] = 1;
  }
}

}  // namespace

SpinConfiguration initial_configuration(std::uint32_t n, double theta, InitMode mode, const RandomSeed& seed) {
  SpinConfiguration c;
  fill_config(draw_trial(n, mode, seed), n, theta, mode, c);
  return c;
}

ThresholdEstimate estimate_threshold(const ThresholdParams& p) {
  if ((static_cast<std::uint64_t>(p.n) * p.k) % 2 != 0) throw UsageError("n*k must be even");
  if (p.trials < 1) throw UsageError("need at least one trial");
  if (!(p.bisect_tol > 0.0)) throw UsageError("bisection tolerance must be positive");
  ThresholdEstimate est;
  est.k = p.k;
  est.n = p.n;
  est.trials = p.trials;
  est.init = p.init;
  est.horizon_cap = p.horizon_cap >= 0 ? p.horizon_cap : static_cast<int>(4.0 * std::log2(p.n) + 50.0);
  const RandomSeed root{p.seed, static_cast<std::uint64_t>(p.k) * 1000003ULL + p.n};

  std::vector<double> sw(p.trials);
  std::vector<std::string> warn(p.trials);
  parallel_for(p.trials, p.threads, [&](std::size_t j) {
    const RegularGraph g = sample_random_regular(p.n, p.k, derive(root, 3 * j));
    const TrialDraws draws = draw_trial(p.n, p.init, derive(root, 3 * j + 1));
    const TieBreakTape tape(derive(root, 3 * j + 2), TieRule::TapeValue);
    SpinConfiguration c;
    auto success = [&](double theta) {
      fill_config(draws, p.n, theta, p.init, c);
      return run_to_classification(g, c, est.horizon_cap, tape).classification == Classification::ConsensusPlus;
    };
    double lo = -1.0, hi = 1.0;
    if (!success(hi)) {
      warn[j] = "trial " + std::to_string(j) + ": no consensus at theta=1";
      sw[j] = 2.0;  // never succeeds inside [-1, 1]
      return;
    }
    if (success(lo)) {
      warn[j] = "trial " + std::to_string(j) + ": consensus already at theta=-1";
      sw[j] = -1.0;
      return;
    }
    while (hi - lo > p.bisect_tol) {
      const double mid = 0.5 * (lo + hi);
      (success(mid) ? hi : lo) = mid;
    }
    sw[j] = hi;
  });
  for (auto& w : warn)
    if (!w.empty()) est.warnings.push_back(w);
  std::sort(sw.begin(), sw.end());
  est.switch_points = sw;

  // gamma = 1/2 crossing: the smallest theta with at least half the trials succeeding.
  const int T = p.trials;
  const int med = (T + 1) / 2 - 1;
  est.theta_hat_raw = sw[med];
  est.theta_hat = std::clamp(est.theta_hat_raw, 0.0, 1.0);
  const double z = 1.96 * std::sqrt(static_cast<double>(T)) / 2.0;
  const int lo_rank = std::max(0, static_cast<int>(std::floor(T / 2.0 - z)) - 1);
  const int hi_rank = std::min(T - 1, static_cast<int>(std::ceil(T / 2.0 + z)) - 1);
  est.ci_halfwidth = 0.5 * (std::min(sw[hi_rank], 1.0) - std::max(sw[lo_rank], -1.0)) + p.bisect_tol;

  std::vector<double> grid = p.grid;
  if (grid.empty())
    for (int i = 0; i <= 40; ++i) grid.push_back(std::clamp(est.theta_hat_raw - 0.1 + 0.005 * i, -1.0, 1.0));
  for (double th : grid) {
    const double frac =
        static_cast<double>(std::upper_bound(sw.begin(), sw.end(), th) - sw.begin()) / static_cast<double>(T);
    est.success_curve.emplace_back(th, frac);
  }
  for (std::size_t i = 1; i < est.success_curve.size(); ++i)
    if (est.success_curve[i].first >= est.success_curve[i - 1].first &&
        est.success_curve[i].second < est.success_curve[i - 1].second)
      est.warnings.push_back("non-monotone success curve near theta=" + std::to_string(est.success_curve[i].first));
  return est;
}

namespace {

// Initial spins for a tree trial: fair bits when theta = 0, thresholded uniforms otherwise.
void draw_tree_spins(Rng& rng, double theta, bool mirror, SpinConfiguration& c) {
  if (theta == 0.0) {
    std::uint64_t word = 0;
    for (std::size_t v = 0; v < c.size(); ++v) {
      if ((v & 63) == 0) word = rng();
      const bool plus = ((word >> (v & 63)) & 1U) != mirror;
      c[v] = plus ? 1 : -1;
    }
    return;
  }
  const double p = 0.5 * (1.0 + theta);
  for (auto& s : c) {
    const double u = rng.uniform();
    s = (mirror ? 1.0 - u : u) < p ? 1 : -1;
  }
}

}  // namespace

BiasCurve bias_curve(int k, double theta0, int depth, int t_max, long trials, std::uint64_t seed, bool antithetic) {
  if (depth < t_max) throw UsageError("depth must be at least t_max");
  if (trials < 2) throw UsageError("need at least two trials");
  const RegularGraph tree = build_tree(k, depth, false);
  std::vector<double> sum(t_max + 1, 0.0), sumsq(t_max + 1, 0.0);
  SpinConfiguration work(tree.n()), scratch(tree.n());
  const RandomSeed root{seed, 0xb1a5ULL};
  for (long i = 0; i < trials; ++i) {
    const int copies = antithetic ? 2 : 1;
    std::vector<double> acc(t_max + 1, 0.0);
    for (int c = 0; c < copies; ++c) {
      Rng rng(derive(root, 2 * static_cast<std::uint64_t>(i)));
      draw_tree_spins(rng, theta0, c == 1, work);
      const TieBreakTape tape(derive(root, 2 * static_cast<std::uint64_t>(i) + 1));
      const std::uint32_t code = root_trajectory_windowed(tree, work, scratch, t_max, tape);
      for (int t = 0; t <= t_max; ++t) acc[t] += spin_at(code, t);
    }
    for (int t = 0; t <= t_max; ++t) {
      const double x = acc[t] / copies;
      sum[t] += x;
      sumsq[t] += x * x;
    }
  }
  BiasCurve curve{k, theta0, {}};
  for (int t = 0; t <= t_max; ++t) {
    const double m = sum[t] / trials;
    const double var = std::max(0.0, (sumsq[t] / trials - m * m) * trials / (trials - 1.0));
    curve.points.push_back({t, m, std::sqrt(var / trials)});
  }
  return curve;
}

std::vector<std::uint64_t> tree_root_trajectories(int k, int depth, int horizon, double theta, long trials,
                                                  std::uint64_t seed) {
  if (depth < horizon) throw UsageError("depth must be at least the horizon");
  const RegularGraph tree = build_tree(k, depth, false);
  std::vector<std::uint64_t> hist(1U << (horizon + 1), 0);
  SpinConfiguration work(tree.n()), scratch(tree.n());
  const RandomSeed root{seed, 0x7ee5ULL};
  for (long i = 0; i < trials; ++i) {
    Rng rng(derive(root, 2 * static_cast<std::uint64_t>(i)));
    draw_tree_spins(rng, theta, false, work);
    const TieBreakTape tape(derive(root, 2 * static_cast<std::uint64_t>(i) + 1));
    ++hist[root_trajectory_windowed(tree, work, scratch, horizon, tape)];
  }
  return hist;
}

void write_success_curve_csv(std::ostream& out, const ThresholdEstimate& est) {
  out << "theta,fraction,trials\n" << std::setprecision(10);
  for (auto [th, f] : est.success_curve) out << th << ',' << f << ',' << est.trials << '\n';
}

void write_bias_curve_csv(std::ostream& out, const BiasCurve& curve) {
  out << "t,mean,stderr\n" << std::setprecision(10);
  for (const auto& p : curve.points) out << p.t << ',' << p.mean << ',' << p.std_error << '\n';
}

std::string threshold_metadata_json(const ThresholdEstimate& est, std::uint64_t seed) {
  nlohmann::json j;
  j["k"] = est.k;
  j["n"] = est.n;
  j["seed"] = seed;
  j["init_mode"] = to_string(est.init);
  j["cap"] = est.horizon_cap;
  j["gamma"] = est.gamma;
  j["trials"] = est.trials;
  j["theta_hat"] = est.theta_hat;
  j["theta_hat_raw"] = est.theta_hat_raw;
  j["ci_halfwidth"] = est.ci_halfwidth;
  j["warnings"] = est.warnings;
  return j.dump(1);
}

}  // namespace majority
