#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "majority/common.hpp"
#include "majority/dynamics.hpp"
#include "majority/graphs.hpp"

namespace majority {

enum class InitMode { Count, Iid };
std::string to_string(InitMode m);

struct ThresholdParams {
  int k = 3;
  std::uint32_t n = 10000;
  int trials = 40;
  double bisect_tol = 1e-3;
  std::uint64_t seed = 1;
  InitMode init = InitMode::Count;
  int horizon_cap = -1;            // -1: 4*log2(n) + 50
  std::vector<double> grid;        // success-curve probes; empty: a window around the estimate
  int threads = 1;
};

struct ThresholdEstimate {
  int k = 0;
  std::uint32_t n = 0;
  int trials = 0;
  double theta_hat = 0.0;      // clamped to [0, 1]
  double theta_hat_raw = 0.0;  // median switching point, may be slightly negative
  double ci_halfwidth = 0.0;
  std::vector<std::pair<double, double>> success_curve;  // (theta, fraction reaching consensus +1)
  std::vector<double> switch_points;                     // per trial, sorted
  int horizon_cap = 0;
  InitMode init = InitMode::Count;
  double gamma = 0.5;
  std::vector<std::string> warnings;
};

// Per-trial switching points under common random numbers: the graph, initial draws and
// tape are shared across theta, and the tape-value tie rule keeps the dynamics monotone,
// so consensus(+1) is a monotone event in theta. The success curve is their empirical CDF.
ThresholdEstimate estimate_threshold(const ThresholdParams& p);

// Initial configuration for one trial at bias theta.
SpinConfiguration initial_configuration(std::uint32_t n, double theta, InitMode mode, const RandomSeed& seed);

struct BiasPoint {
  int t = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct BiasCurve {
  int k = 0;
  double theta0 = 0.0;
  std::vector<BiasPoint> points;
};

BiasCurve bias_curve(int k, double theta0, int depth, int t_max, long trials, std::uint64_t seed,
                     bool antithetic = false);

// Histogram of root trajectories (times 0..horizon) on a full tree of the given depth.
std::vector<std::uint64_t> tree_root_trajectories(int k, int depth, int horizon, double theta, long trials,
                                                  std::uint64_t seed);

void write_success_curve_csv(std::ostream& out, const ThresholdEstimate& est);
void write_bias_curve_csv(std::ostream& out, const BiasCurve& curve);
std::string threshold_metadata_json(const ThresholdEstimate& est, std::uint64_t seed);

}  // namespace majority
