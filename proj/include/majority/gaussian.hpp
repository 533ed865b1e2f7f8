#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "majority/common.hpp"

namespace majority {

struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};
struct AccuracyNotReached : NumericalError {
  using NumericalError::NumericalError;
};

double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

// Constraint of one coordinate in a slice region. Free marginalizes the coordinate out.
enum class Side : std::uint8_t { Pinned, Plus, Minus, Free };

struct SlicePartition {
  std::vector<Side> side;

  static SlicePartition orthant(const std::vector<int>& signs);  // +1 -> Plus, -1 -> Minus
  std::size_t dim() const { return side.size(); }
  int pinned_count() const;
};

struct GaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct SliceResult {
  double value = 0.0;
  double std_error = 0.0;
  std::string method;
};

enum class SliceMethod { QuasiMonteCarlo, PlainMonteCarlo };

struct SliceOptions {
  double target_std_error = 1e-5;
  std::uint64_t seed = 0;
  int shifts = 12;
  std::uint64_t max_points = 1ULL << 24;
  SliceMethod method = SliceMethod::QuasiMonteCarlo;
  bool strict = true;  // throw AccuracyNotReached when the budget runs out
};

// P(z in slice) for z ~ N(mean, cov); one pinned coordinate contributes its density at 0.
SliceResult slice_prob(const GaussianSpec& spec, const SlicePartition& part, const SliceOptions& opts = {});

// Conditional law of the remaining coordinates given z_pinned = 0.
GaussianSpec conditional_reduce(const GaussianSpec& spec, int pinned);

// Restriction to the listed coordinates (marginalization).
GaussianSpec select(const GaussianSpec& spec, const std::vector<int>& idx);

}  // namespace majority
