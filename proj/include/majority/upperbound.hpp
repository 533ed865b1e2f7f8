#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "majority/common.hpp"
#include "majority/graphs.hpp"

namespace majority {

enum class BootstrapMethod { FixedPoint, Simulation };
std::string to_string(BootstrapMethod m);

struct BootstrapResult {
  int k = 0;
  int m = 0;  // floor((k+1)/2)
  double rho_c = 0.0;
  double theta_u = 0.0;
  BootstrapMethod method = BootstrapMethod::FixedPoint;
  double ci_low = 0.0;  // interval for rho_c
  double ci_high = 0.0;
  std::vector<int> depths;  // simulation only
  std::string diagnostics;
};

struct BootstrapOptions {
  double precision = 1e-6;           // bisection width on rho
  int trials = 100;                  // simulation trials per depth
  std::uint64_t max_tree_vertices = 2000000;
  int bootstrap_reps = 200;          // resamples for the simulation interval
};

BootstrapResult bootstrap_rho_c(int k, BootstrapMethod method, const BootstrapOptions& opts, std::uint64_t seed);

// Vacant vertices with at least m occupied neighbors become occupied, repeated to a fixpoint.
std::vector<std::uint8_t> bootstrap_closure(const RegularGraph& g, std::vector<std::uint8_t> occupied, int m);

// Largest depth reached by the occupied cluster of the root (-1 when the root is vacant).
int root_cluster_depth(const RegularGraph& tree, const std::vector<std::uint8_t>& occupied);

// Spectral radius of the mean matrix of the occupied-cluster branching structure at density rho.
double cluster_branching_radius(int k, int m, double rho);

// Density above which the vacant core of the k-regular tree (threshold m) vanishes.
double fixation_density(int k, int m, double precision = 1e-9);

// Simulation depths for a given degree under a vertex budget.
std::vector<int> simulation_depths(int k, std::uint64_t max_vertices);

void write_bootstrap_csv(std::ostream& out, const std::vector<BootstrapResult>& rows);

}  // namespace majority
