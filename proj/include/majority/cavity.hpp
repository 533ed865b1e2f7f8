#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "majority/gaussian.hpp"

namespace majority {

// Correlation C(t,s) and response R(t,s) up to horizon T. The drift of sigma(r+1)
// uses row r of R, i.e. sigma(r+1) = sign(eta(r) + sum_{s<r} R(r,s) sigma(s) + h(r)).
struct CavityKernels {
  int T = 0;
  Eigen::MatrixXd C;
  Eigen::MatrixXd R;
  Eigen::MatrixXd C_err;
  Eigen::MatrixXd R_err;
  double accuracy = 1e-5;
  std::uint64_t seed = 0;
};

struct EffectiveProcessParams {
  Eigen::MatrixXd C;
  Eigen::MatrixXd R;
  std::vector<double> h;  // empty means zero field
};

struct BiasPrediction {
  int k = 0;
  int T_star = 0;
  double omega0 = 0.0;
  std::vector<double> omega;           // omega_0 .. omega_{T*}
  std::vector<double> predicted_mean;  // t = 0 .. T*+2
  std::vector<double> predicted_err;   // integration error per entry
};

CavityKernels compute_kernels(int T_max, double accuracy, std::uint64_t seed, int threads = 1);

// Effective-process sampler; trajectories of length horizon+1 as codes (bit t <=> sigma(t)=+1).
std::uint32_t sample_effective(const EffectiveProcessParams& params, int horizon, const RandomSeed& seed);
std::vector<std::uint32_t> sample_effective_many(const EffectiveProcessParams& params, int horizon,
                                                 std::uint64_t count, const RandomSeed& seed);

EffectiveProcessParams effective_params(const CavityKernels& kernels, std::vector<double> h = {});

// Probability of a trajectory of `length` = T+2 spins (times 0..T+1); requires T <= kernels.T.
double trajectory_prob(const CavityKernels& kernels, std::uint32_t code, int length, double accuracy = 1e-6,
                       std::uint64_t seed = 0);

BiasPrediction predict_bias(int k, int T_star, double omega0, const CavityKernels& kernels, double accuracy,
                            std::uint64_t seed);

void write_kernels_csv(std::ostream& out, const CavityKernels& kernels);
void save_kernels_json(const std::string& path, const CavityKernels& kernels);
CavityKernels load_kernels_json(const std::string& path);
// Reuses the cache when its (T, accuracy, seed) key matches, otherwise computes and stores.
CavityKernels cached_kernels(const std::string& path, int T_max, double accuracy, std::uint64_t seed);

}  // namespace majority
