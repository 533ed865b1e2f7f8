#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "majority/common.hpp"

namespace majority {

// P(sigma_0^T || u_0^T) for the root of a rooted tree driven by the field u.
// Stored densely: table[u * S + sigma] with S = 2^(T+1).
struct ConditionalFamily {
  int k = 0;
  int T = 0;
  double theta = 0.0;
  std::vector<double> table;

  std::uint32_t size() const { return 1U << (T + 1); }
  double operator()(std::uint32_t sigma, std::uint32_t u) const { return table[u * size() + sigma]; }
};

struct ExactOptions {
  std::uint64_t lattice_cap = 1ULL << 26;  // entries of the children-sum lattice
};

ConditionalFamily exact_root_distribution(int k, int T, double theta, const ExactOptions& opts = {});

// Largest |difference| between columns whose u agree on 0..T-1 (should vanish).
double column_independence_gap(const ConditionalFamily& fam);

struct PsiTables {
  int k = 0;
  int T = 0;
  double theta = 0.0;
  int d = 0;                  // iterations performed
  std::vector<double> odd;    // indexed like ConditionalFamily::table
  std::vector<double> even;
  double sup_change = 0.0;    // last entrywise sup-change
  double prev_sup_change = 0.0;
  bool converged = false;
  bool hit_floor = false;     // stopped because some odd ratio fell below eps_positive
  double min_odd = 0.0;       // smallest Psi_odd / P over entries with P > 0
  double margin = 0.0;        // smallest (Psi_odd - extrapolated remaining decrease) / P
  double max_monotone_violation = 0.0;
  double max_bound_violation = 0.0;
};

struct PsiOptions {
  long d_max = 2000000;
  double eps_converge = 1e-12;
  double eps_positive = 1e-11;  // on Psi_odd / P; stop early once a ratio is at or below this
  bool bipartite = true;
  double slack = 1e-12;         // tolerated numerical excess for bounds and monotonicity
};

// Largest |P - P_A * P_B| over entries: how far P is from splitting over the two time-parity classes.
double bipartite_factorization_gap(const ConditionalFamily& fam);

PsiTables psi_initial(const ConditionalFamily& fam);
// One iteration by the direct (full-trajectory) recursion; the reference path.
PsiTables psi_update_direct(const ConditionalFamily& fam, const PsiTables& prev);
PsiTables psi_iterate(const ConditionalFamily& fam, const PsiOptions& opts = {});

struct ThetaLbResult {
  int k = 0;
  int T = 0;
  double theta_lb = 0.0;
  double lo = 0.0;  // last theta classified positive
  double hi = 0.0;  // first theta classified non-positive
  double margin = 0.0;
  long d_used = 0;
  double sup_change = 0.0;
  bool converged = true;
  double max_monotone_violation = 0.0;
  double max_bound_violation = 0.0;
};

struct ThetaLbOptions {
  double bisect_tol = 5e-4;
  PsiOptions psi;
  ExactOptions exact;
};

// Positivity of every odd entry in the d -> infinity limit at one theta.
bool psi_positive(int k, int T, double theta, const ThetaLbOptions& opts, PsiTables* out = nullptr);
ThetaLbResult theta_lb(int k, int T, const ThetaLbOptions& opts = {});

struct HatTables {
  std::vector<double> odd;   // indexed by sigma
  std::vector<double> even;
};
HatTables full_tree_psi(const ConditionalFamily& fam, const PsiTables& psi);

void write_psi_csv(std::ostream& out, const PsiTables& psi);

}  // namespace majority
