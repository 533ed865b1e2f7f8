#include "majority/upperbound.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <queue>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/binomial.hpp>

namespace majority {

std::string to_string(BootstrapMethod m) { return m == BootstrapMethod::FixedPoint ? "fixed-point" : "simulation"; }

namespace {

double binom_pmf(int n, int c, double x) {
  return boost::math::binomial_coefficient<double>(n, c) * std::pow(x, c) * std::pow(1.0 - x, n - c);
}

double binom_tail(int n, int from, double x) {
  double s = 0.0;
  for (int c = std::max(from, 0); c <= n; ++c) s += binom_pmf(n, c, x);
  return s;
}

// Probability that a child subtree root lies in the vacant core (largest fixed point).
// A vertex stays vacant forever iff it starts vacant and keeps q = k-m+1 such neighbors.
double vacant_core_message(int k, int m, double rho) {
  const int q = k - m + 1;
  double x = 1.0;
  for (int it = 0; it < 1000000; ++it) {
    const double nx = (1.0 - rho) * binom_tail(k - 1, q - 1, x);
    if (std::abs(nx - x) < 1e-15) return nx;
    x = nx;
  }
  return x;
}

}  // namespace

double fixation_density(int k, int m, double precision) {
  double lo = 0.0, hi = 1.0;
  while (hi - lo > precision) {
    const double mid = 0.5 * (lo + hi);
    (vacant_core_message(k, m, mid) > 1e-6 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double cluster_branching_radius(int k, int m, double rho) {
  // Types of a non-root vertex of the occupied cluster: (b, M) with b = the parent
  // belongs to the vacant core seen from this vertex, M = this vertex's own upward
  // core message. Entry [type, type'] is the mean number of children of type' that
  // are occupied and adjacent, so the cluster is infinite with positive probability
  // exactly when the spectral radius exceeds 1.
  const int q = k - m + 1;
  const double x = vacant_core_message(k, m, rho);
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  double pm[2] = {0.0, 0.0};
  for (int c = 0; c < k; ++c) {  // c = core children among k-1
    const double pc = binom_pmf(k - 1, c, x);
    for (int vac = 0; vac < 2; ++vac) {
      const double w = pc * (vac ? 1.0 - rho : rho);
      const int Mv = (vac && c >= q - 1) ? 1 : 0;
      pm[Mv] += w;
      for (int b = 0; b < 2; ++b) {
        if (vac && c + b >= q) continue;  // the vertex would be in the core, not occupied
        for (int mp = 0; mp < 2; ++mp) {
          const int cnt = mp ? c : k - 1 - c;
          if (cnt == 0) continue;
          const int bp = (vac && c - mp + b >= q - 1) ? 1 : 0;
          A(b * 2 + Mv, bp * 2 + mp) += w * cnt;
        }
      }
    }
  }
  for (int i = 0; i < 4; ++i)
    if (pm[i % 2] > 0.0) A.row(i) /= pm[i % 2];
  Eigen::EigenSolver<Eigen::Matrix4d> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<std::uint8_t> bootstrap_closure(const RegularGraph& g, std::vector<std::uint8_t> occupied, int m) {
  if (occupied.size() != g.n()) throw UsageError("occupation vector length does not match graph");
  std::vector<int> count(g.n(), 0);
  std::queue<std::uint32_t> q;
  for (std::uint32_t v = 0; v < g.n(); ++v)
    if (occupied[v]) q.push(v);
  // Each vertex enters the queue once, when it becomes occupied.
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : g.neighbors(v))
      if (!occupied[w] && ++count[w] >= m) {
        occupied[w] = 1;
        q.push(w);
      }
  }
  return occupied;
}

int root_cluster_depth(const RegularGraph& tree, const std::vector<std::uint8_t>& occupied) {
  if (!occupied[0]) return -1;
  int best = 0;
  std::vector<std::uint32_t> stack{0};
  // On a tree with breadth-first numbering the children of v are its neighbors above v.
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    best = std::max(best, tree.depth(v));
    for (auto w : tree.neighbors(v))
      if (w > v && occupied[w]) stack.push_back(w);
  }
  return best;
}

std::vector<int> simulation_depths(int k, std::uint64_t max_vertices) {
  int D = 2;
  while (tree_vertex_count(k, D + 1, false) <= max_vertices) ++D;
  std::vector<int> out;
  for (int d : {D - 4, D - 2, D})
    if (d >= 2) out.push_back(d);
  return out;
}

namespace {

// Per-trial switching density for the event "root cluster reaches depth D-1" with the
// root forced occupied. The event is monotone in rho under shared uniforms.
double switching_density(const RegularGraph& tree, int m, const std::vector<double>& U, double precision) {
  const int target = tree.tree_depth() - 1;
  auto reaches = [&](double rho) {
    std::vector<std::uint8_t> occ(tree.n());
    for (std::uint32_t v = 0; v < tree.n(); ++v) occ[v] = U[v] < rho;
    occ[0] = 1;
    return root_cluster_depth(tree, bootstrap_closure(tree, std::move(occ), m)) >= target;
  };
  double lo = 0.0, hi = 0.5;
  if (!reaches(hi)) return 1.0;  // beyond the scanned range
  while (hi - lo > precision) {
    const double mid = 0.5 * (lo + hi);
    (reaches(mid) ? hi : lo) = mid;
  }
  return hi;
}

double empirical_cdf(const std::vector<double>& sorted, double x) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
         static_cast<double>(sorted.size());
}

// Smallest grid density above which D_max f_{D_max} >= D_min f_{D_min} holds throughout.
double crossing(const std::vector<double>& shallow, int d_shallow, const std::vector<double>& deep, int d_deep) {
  std::vector<double> grid(shallow);
  grid.insert(grid.end(), deep.begin(), deep.end());
  grid.push_back(0.5);
  std::sort(grid.begin(), grid.end());
  double rc = 0.5;
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    if (*it > 0.5) continue;
    if (d_deep * empirical_cdf(deep, *it) >= d_shallow * empirical_cdf(shallow, *it) && empirical_cdf(deep, *it) > 0)
      rc = *it;
    else
      break;
  }
  return rc;
}

}  // namespace

BootstrapResult bootstrap_rho_c(int k, BootstrapMethod method, const BootstrapOptions& opts, std::uint64_t seed) {
  if (k < 3) throw UsageError("k must be at least 3");
  BootstrapResult res;
  res.k = k;
  res.m = (k + 1) / 2;
  res.method = method;
  const double rho_f = fixation_density(k, res.m);
  std::ostringstream diag;
  diag << std::setprecision(6) << "fixation_rho=" << rho_f << ";fixation_rho_degree_k+1="
       << fixation_density(k + 1, res.m) << ";";

  if (method == BootstrapMethod::FixedPoint) {
    double lo = 0.0, hi = rho_f;
    if (cluster_branching_radius(k, res.m, hi * (1 - 1e-9)) <= 1.0)
      throw NumericalError("no percolation below the fixation density");
    while (hi - lo > opts.precision) {
      const double mid = 0.5 * (lo + hi);
      (cluster_branching_radius(k, res.m, mid) > 1.0 ? hi : lo) = mid;
    }
    res.rho_c = 0.5 * (lo + hi);
    res.ci_low = lo;
    res.ci_high = hi;
  } else {
    res.depths = simulation_depths(k, opts.max_tree_vertices);
    if (res.depths.size() < 2) throw ResourceCapError("vertex budget too small for a depth schedule");
    std::vector<std::vector<double>> sw(res.depths.size());
    for (std::size_t di = 0; di < res.depths.size(); ++di) {
      const RegularGraph tree = build_tree(k, res.depths[di], false);
      std::vector<double> U(tree.n());
      for (int trial = 0; trial < opts.trials; ++trial) {
        Rng rng(derive(RandomSeed{seed, static_cast<std::uint64_t>(res.depths[di])}, trial));
        for (auto& u : U) u = rng.uniform();
        sw[di].push_back(switching_density(tree, res.m, U, std::max(opts.precision, 1e-4)));
      }
      std::sort(sw[di].begin(), sw[di].end());
    }
    const auto& shallow = sw.front();
    const auto& deep = sw.back();
    const int ds = res.depths.front(), dd = res.depths.back();
    res.rho_c = crossing(shallow, ds, deep, dd);
    // Percentile interval by resampling trials within each depth.
    std::vector<double> reps;
    Rng rng(RandomSeed{seed, 0xb007ULL});
    for (int r = 0; r < opts.bootstrap_reps; ++r) {
      std::vector<double> a(shallow.size()), b(deep.size());
      for (auto& x : a) x = shallow[rng() % shallow.size()];
      for (auto& x : b) x = deep[rng() % deep.size()];
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      reps.push_back(crossing(a, ds, b, dd));
    }
    std::sort(reps.begin(), reps.end());
    res.ci_low = reps[static_cast<std::size_t>(0.025 * (reps.size() - 1))];
    res.ci_high = reps[static_cast<std::size_t>(0.975 * (reps.size() - 1))];
    for (std::size_t di = 0; di < res.depths.size(); ++di)
      diag << "reach_at_rho_c[D=" << res.depths[di] << "]=" << empirical_cdf(sw[di], res.rho_c) << ";";
  }
  res.theta_u = 1.0 - 2.0 * res.rho_c;
  res.diagnostics = diag.str();
  return res;
}

void write_bootstrap_csv(std::ostream& out, const std::vector<BootstrapResult>& rows) {
  out << "k,m,rho_c,theta_u,method,ci\n" << std::setprecision(8);
  for (const auto& r : rows)
    out << r.k << ',' << r.m << ',' << r.rho_c << ',' << r.theta_u << ',' << to_string(r.method) << ','
        << 0.5 * (r.ci_high - r.ci_low) << '\n';
}

}  // namespace majority
