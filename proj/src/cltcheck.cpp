#include "majority/cltcheck.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace majority {

namespace {

// Target in the {0,1} convention; the +-1 statement maps by S01 = (S + N) / 2.
std::vector<long> zero_one_target(const LatticeSumSpec& spec) {
  std::vector<long> a = spec.a;
  if (spec.convention == LatticeConvention::PlusMinus)
    for (auto& x : a) {
      if (((x + spec.N) % 2 + 2) % 2 != 0) throw UsageError("target parity must match N in the +-1 convention");
      x = (x + spec.N) / 2;
    }
  return a;
}

}  // namespace

void validate(const LatticeSumSpec& spec) {
  if (spec.d < 1 || spec.d > 3) throw UsageError("dimension must be 1..3");
  if (spec.N < 1 || spec.N > 2000) throw UsageError("N must be in 1..2000");
  if (spec.cell_probs.size() != (1U << spec.d)) throw UsageError("need 2^d cell probabilities");
  if (static_cast<int>(spec.a.size()) != spec.d || static_cast<int>(spec.partition.dim()) != spec.d)
    throw UsageError("target and partition must have d entries");
  double total = 0.0;
  for (double p : spec.cell_probs) {
    if (p < 0.0) throw UsageError("negative cell probability");
    if (spec.B > 0.0 && p < 1.0 / spec.B) throw UsageError("cell probability below 1/B");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw UsageError("cell probabilities must sum to 1");
  const auto a = zero_one_target(spec);
  if (spec.B > 0.0) {
    for (int j = 0; j < spec.d; ++j) {
      double mean = 0.0;
      for (std::uint32_t c = 0; c < spec.cell_probs.size(); ++c)
        if ((c >> j) & 1U) mean += spec.cell_probs[c];
      if (std::abs(static_cast<double>(a[j]) - spec.N * mean) > spec.B * std::sqrt(static_cast<double>(spec.N)))
        throw UsageError("target outside the B*sqrt(N) window of the mean");
    }
  }
}

double exact_lattice_prob(const LatticeSumSpec& spec, std::uint64_t state_cap) {
  validate(spec);
  const auto a = zero_one_target(spec);
  const int N = spec.N;
  // Tracked coordinates and their state ranges; constraints that cannot bind are dropped.
  std::vector<int> coord;
  std::vector<Side> side;
  std::vector<long> size;
  for (int j = 0; j < spec.d; ++j) {
    Side s = spec.partition.side[j];
    const long aj = a[j];
    switch (s) {
      case Side::Free: continue;
      case Side::Plus:
        if (aj <= 0) continue;
        if (aj > N) return 0.0;
        break;
      case Side::Minus:
        if (aj >= N) continue;
        if (aj < 0) return 0.0;
        break;
      case Side::Pinned:
        if (aj < 0 || aj > N) return 0.0;
        break;
    }
    coord.push_back(j);
    side.push_back(s);
    size.push_back(aj + 1);
  }
  std::uint64_t states = 1;
  for (long s : size) {
    states *= static_cast<std::uint64_t>(s);
    if (states > state_cap) throw ResourceCapError("lattice state space exceeds the cap");
  }
  // Project cells onto the tracked coordinates.
  std::map<std::uint32_t, double> cells;
  for (std::uint32_t c = 0; c < spec.cell_probs.size(); ++c) {
    std::uint32_t proj = 0;
    for (std::size_t i = 0; i < coord.size(); ++i)
      if ((c >> coord[i]) & 1U) proj |= 1U << i;
    cells[proj] += spec.cell_probs[c];
  }
  std::vector<std::uint64_t> stride(coord.size(), 1);
  for (std::size_t i = 1; i < coord.size(); ++i) stride[i] = stride[i - 1] * static_cast<std::uint64_t>(size[i - 1]);

  std::vector<double> cur(states, 0.0), nxt(states);
  cur[0] = 1.0;
  std::vector<long> v(coord.size());
  for (int step = 0; step < N; ++step) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    std::fill(v.begin(), v.end(), 0);
    for (std::uint64_t idx = 0; idx < states; ++idx) {
      const double w = cur[idx];
      if (w != 0.0) {
        for (const auto& [proj, p] : cells) {
          std::uint64_t j = 0;
          bool alive = true;
          for (std::size_t i = 0; i < coord.size(); ++i) {
            long x = v[i] + ((proj >> i) & 1U);
            if (x >= size[i]) {
              if (side[i] == Side::Plus)
                x = size[i] - 1;  // saturate at the threshold
              else {
                alive = false;  // exceeded a ceiling that can never be undone
                break;
              }
            }
            j += static_cast<std::uint64_t>(x) * stride[i];
          }
          if (alive) nxt[j] += w * p;
        }
      }
      for (std::size_t i = 0; i < coord.size(); ++i) {
        if (++v[i] < size[i]) break;
        v[i] = 0;
      }
    }
    cur.swap(nxt);
  }
  KahanSum total;
  std::fill(v.begin(), v.end(), 0);
  for (std::uint64_t idx = 0; idx < states; ++idx) {
    bool ok = true;
    for (std::size_t i = 0; i < coord.size(); ++i)
      if (side[i] != Side::Minus && v[i] != size[i] - 1) ok = false;
    if (ok) total.add(cur[idx]);
    for (std::size_t i = 0; i < coord.size(); ++i) {
      if (++v[i] < size[i]) break;
      v[i] = 0;
    }
  }
  return total.value();
}

CltComparison clt_compare(const LatticeSumSpec& spec, const SliceOptions& opts) {
  validate(spec);
  const auto a = zero_one_target(spec);
  const int d = spec.d;
  const double N = spec.N, rootN = std::sqrt(N);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (std::uint32_t c = 0; c < spec.cell_probs.size(); ++c) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = (c >> j) & 1U;
    mean += spec.cell_probs[c] * x;
    second += spec.cell_probs[c] * x * x.transpose();
  }
  GaussianSpec g;
  g.cov = second - mean * mean.transpose();
  g.mean.resize(d);
  for (int j = 0; j < d; ++j) g.mean(j) = rootN * mean(j) - static_cast<double>(a[j]) / rootN;
  const int K = spec.partition.pinned_count();
  CltComparison out;
  out.exact = exact_lattice_prob(spec);
  out.approx = std::pow(N, -0.5 * K) * slice_prob(g, spec.partition, opts).value;
  out.rel_err = (out.approx - out.exact) / out.exact;
  out.bound_ratio = std::abs(out.rel_err) * std::pow(N, 1.0 / (2.0 * K + 2.0));
  return out;
}

void write_clt_csv_header(std::ostream& out) { out << "d,N,K,exact,approx,err,bound-ratio\n"; }

void write_clt_csv_row(std::ostream& out, const LatticeSumSpec& spec, const CltComparison& c) {
  out << std::setprecision(10) << spec.d << ',' << spec.N << ',' << spec.partition.pinned_count() << ',' << c.exact
      << ',' << c.approx << ',' << c.rel_err << ',' << c.bound_ratio << '\n';
}

}  // namespace majority
