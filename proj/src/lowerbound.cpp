#include "majority/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace majority {

namespace {

// Root kernel K_u(s | y): s = sign(y + u), ties split evenly.
inline double kernel(int s, int y, int u) {
  const int x = y + u;
  if (x == 0) return 0.5;
  return (x > 0) == (s > 0) ? 1.0 : 0.0;
}

double p0(int spin, double theta) { return spin > 0 ? 0.5 * (1.0 + theta) : 0.5 * (1.0 - theta); }

int core_threshold(int k) { return (k + 2) / 2 - 1; }  // ceil((k+1)/2) - 1

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// Neumaier-compensated dense array.
struct CompensatedArray {
  std::vector<double> sum, comp;
  explicit CompensatedArray(std::size_t n = 0) : sum(n, 0.0), comp(n, 0.0) {}
  void add(std::size_t i, double x) {
    const double s = sum[i];
    const double t = s + x;
    comp[i] += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    sum[i] = t;
  }
  double get(std::size_t i) const { return sum[i] + comp[i]; }
  void clear() {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(comp.begin(), comp.end(), 0.0);
  }
};

struct Atom {
  std::uint32_t offset;
  double in;   // mass of trajectories inside the core
  double out;  // remaining mass
};

// Convolution of `children` i.i.d. atoms over (lattice point, capped core count).
// Lattice points are mixed-radix count vectors; counts never exceed `children` < radix.
// Returns the lattice marginal restricted to core count >= cap.
std::vector<double> core_convolution(const std::vector<Atom>& atoms, int children, std::size_t lattice, int cap) {
  const int C = cap + 1;
  CompensatedArray cur(lattice * C), nxt(lattice * C);
  cur.sum[0] = 1.0;
  std::size_t reach = 1;  // entries beyond `reach` in the lattice are still zero
  std::uint32_t max_off = 0;
  for (const auto& a : atoms) max_off = std::max(max_off, a.offset);
  for (int c = 0; c < children; ++c) {
    nxt.clear();
    for (std::size_t idx = 0; idx < reach; ++idx)
      for (int r = 0; r < C; ++r) {
        const double v = cur.get(idx * C + r);
        if (v == 0.0) continue;
        const int rin = std::min(r + 1, cap);
        for (const auto& a : atoms) {
          const std::size_t j = idx + a.offset;
          if (a.in != 0.0) nxt.add(j * C + rin, v * a.in);
          if (a.out != 0.0) nxt.add(j * C + r, v * a.out);
        }
      }
    std::swap(cur, nxt);
    reach = std::min(lattice, reach + max_off);
  }
  std::vector<double> g(lattice);
  for (std::size_t idx = 0; idx < lattice; ++idx) g[idx] = cur.get(idx * C + cap);
  return g;
}

// Plain convolution of `children` atoms (in-mass only) over the lattice.
std::vector<double> lattice_convolution(const std::vector<Atom>& atoms, int children, std::size_t lattice) {
  CompensatedArray cur(lattice), nxt(lattice);
  cur.sum[0] = 1.0;
  std::size_t reach = 1;
  std::uint32_t max_off = 0;
  for (const auto& a : atoms) max_off = std::max(max_off, a.offset);
  for (int c = 0; c < children; ++c) {
    nxt.clear();
    for (std::size_t idx = 0; idx < reach; ++idx) {
      const double v = cur.get(idx);
      if (v == 0.0) continue;
      for (const auto& a : atoms)
        if (a.in != 0.0) nxt.add(idx + a.offset, v * a.in);
    }
    std::swap(cur, nxt);
    reach = std::min(lattice, reach + max_off);
  }
  std::vector<double> g(lattice);
  for (std::size_t idx = 0; idx < lattice; ++idx) g[idx] = cur.get(idx);
  return g;
}

// sum_y g(y) prod_j K_{u_j}(s_j | y_j), where coordinate j of the lattice holds the
// count of +1 children and y_j = 2 count - children.
double kernel_sum(const std::vector<double>& g, int radix, int children, const std::vector<int>& s,
                  const std::vector<int>& u) {
  const int dims = static_cast<int>(s.size());
  std::vector<std::vector<double>> kv(dims, std::vector<double>(radix));
  for (int j = 0; j < dims; ++j)
    for (int c = 0; c < radix; ++c) kv[j][c] = c <= children ? kernel(s[j], 2 * c - children, u[j]) : 0.0;
  KahanSum acc;
  std::vector<int> cnt(dims, 0);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (g[idx] != 0.0) {
      double w = g[idx];
      for (int j = 0; j < dims && w != 0.0; ++j) w *= kv[j][cnt[j]];
      if (w != 0.0) acc.add(w);
    }
    for (int j = 0; j < dims; ++j) {  // mixed-radix increment
      if (++cnt[j] < radix) break;
      cnt[j] = 0;
    }
  }
  return acc.value();
}

std::uint32_t count_offset(std::uint32_t code, const std::vector<int>& times, int radix) {
  std::uint32_t off = 0, stride = 1;
  for (int t : times) {
    if ((code >> t) & 1U) off += stride;
    stride *= static_cast<std::uint32_t>(radix);
  }
  return off;
}

// Smallest x_i / ref_i over entries with ref_i > 0.
double relative_min(const std::vector<double>& x, const std::vector<double>& ref) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (ref[i] > 0.0) m = std::min(m, x[i] / ref[i]);
  return m;
}

}  // namespace

ConditionalFamily exact_root_distribution(int k, int T, double theta, const ExactOptions& opts) {
  if (k < 3) throw UsageError("k must be at least 3");
  if (T < 0) throw UsageError("T must be non-negative");
  if (theta < -1.0 || theta > 1.0) throw UsageError("theta must lie in [-1,1]");
  if (T + 1 > 20) throw ResourceCapError("trajectory tables too large");
  if (ipow(static_cast<std::uint64_t>(k), T) > opts.lattice_cap)
    throw ResourceCapError("children-sum lattice exceeds the memory cap; reduce T or k");

  ConditionalFamily fam{k, 0, theta, {}};
  fam.table.resize(4);
  for (std::uint32_t u = 0; u < 2; ++u)
    for (std::uint32_t s = 0; s < 2; ++s) fam.table[u * 2 + s] = p0(s ? 1 : -1, theta);

  const int children = k - 1;
  for (int h = 0; h < T; ++h) {
    const std::uint32_t S = 1U << (h + 1), S2 = S << 1;
    std::vector<int> times(h + 1);
    for (int t = 0; t <= h; ++t) times[t] = t;
    const std::size_t lattice = ipow(static_cast<std::uint64_t>(k), h + 1);
    ConditionalFamily next{k, h + 1, theta, std::vector<double>(static_cast<std::size_t>(S2) * S2, 0.0)};
    for (std::uint32_t rho = 0; rho < S; ++rho) {
      std::vector<Atom> atoms;
      for (std::uint32_t c = 0; c < S; ++c) atoms.push_back({count_offset(c, times, k), fam(c, rho), 0.0});
      const auto g = lattice_convolution(atoms, children, lattice);
      for (std::uint32_t u = 0; u < S; ++u)
        for (int snew = -1; snew <= 1; snew += 2) {
          std::vector<int> s(h + 1), uu(h + 1);
          for (int t = 0; t <= h; ++t) {
            s[t] = t < h ? spin_at(rho, t + 1) : snew;
            uu[t] = spin_at(u, t);
          }
          const double v = p0(spin_at(rho, 0), theta) * kernel_sum(g, k, children, s, uu);
          const std::uint32_t sigma = with_spin(rho, h + 1, snew);
          for (std::uint32_t top = 0; top < 2; ++top) next.table[(u | (top << (h + 1))) * S2 + sigma] = v;
        }
    }
    fam = std::move(next);
  }
  return fam;
}

double column_independence_gap(const ConditionalFamily& fam) {
  const std::uint32_t S = fam.size(), half = S >> 1;
  double gap = 0.0;
  for (std::uint32_t u = 0; u < half; ++u)
    for (std::uint32_t s = 0; s < S; ++s) gap = std::max(gap, std::abs(fam(s, u) - fam(s, u | half)));
  return gap;
}

PsiTables psi_initial(const ConditionalFamily& fam) {
  PsiTables psi;
  psi.k = fam.k;
  psi.T = fam.T;
  psi.theta = fam.theta;
  psi.odd = fam.table;
  psi.even = fam.table;
  const std::uint32_t S = fam.size();
  for (std::uint32_t u = 0; u < S; ++u)
    for (std::uint32_t s = 0; s < S; ++s)
      if (spin_at(s, fam.T) > 0) psi.even[u * S + s] = 0.0;
  psi.min_odd = relative_min(psi.odd, fam.table);
  return psi;
}

PsiTables psi_update_direct(const ConditionalFamily& fam, const PsiTables& prev) {
  const int k = fam.k, T = fam.T, children = k - 1, cap = core_threshold(k);
  const std::uint32_t S = fam.size();
  std::vector<int> times(T);
  for (int t = 0; t < T; ++t) times[t] = t;
  const std::size_t lattice = ipow(static_cast<std::uint64_t>(k), T);
  PsiTables next = prev;
  next.d = prev.d + 1;
  for (std::uint32_t so = 0; so < S; ++so) {
    std::vector<Atom> odd_atoms, even_atoms;  // atoms feeding the odd and even updates
    for (std::uint32_t c = 0; c < S; ++c) {
      const std::uint32_t off = count_offset(c, times, k);
      const double p = fam(c, so);
      odd_atoms.push_back({off, prev.even[so * S + c], p - prev.even[so * S + c]});
      even_atoms.push_back({off, prev.odd[so * S + c], p - prev.odd[so * S + c]});
    }
    const auto g_odd = core_convolution(odd_atoms, children, lattice, cap);
    const auto g_even = core_convolution(even_atoms, children, lattice, cap);
    const double w0 = p0(spin_at(so, 0), fam.theta);
    for (std::uint32_t u = 0; u < S; ++u) {
      std::vector<int> s(T), uu(T);
      for (int t = 0; t < T; ++t) {
        s[t] = spin_at(so, t + 1);
        uu[t] = spin_at(u, t);
      }
      next.odd[u * S + so] = w0 * kernel_sum(g_odd, k, children, s, uu);
      next.even[u * S + so] = spin_at(so, T) < 0 ? w0 * kernel_sum(g_even, k, children, s, uu) : 0.0;
    }
  }
  return next;
}

namespace {

// Parity-split evaluation. Times are split into A (parity of T+1) and B (parity of T);
// P factorizes as P_A(sigma_A || u_B) * P_B(sigma_B || u_A), and the odd (even) core
// event only touches the A (B) class of the root.
class BipartitePsi {
 public:
  explicit BipartitePsi(const ConditionalFamily& fam) : fam_(fam) {
    for (int t = 0; t <= fam.T; ++t) ((t % 2) == (fam.T % 2) ? B_ : A_).push_back(t);
    nA_ = 1U << A_.size();
    nB_ = 1U << B_.size();
    PA_.assign(nA_ * nB_, 0.0);
    PB_.assign(nB_ * nA_, 0.0);
    const std::uint32_t S = fam.size();
    for (std::uint32_t s = 0; s < S; ++s) {
      const std::uint32_t a = pack(s, A_), b = pack(s, B_);
      for (std::uint32_t ub = 0; ub < nB_; ++ub) PA_[a * nB_ + ub] += fam(s, unpack(ub, B_));
      for (std::uint32_t ua = 0; ua < nA_; ++ua) PB_[b * nA_ + ua] += fam(s, unpack(ua, A_));
    }
    B_inner_.assign(B_.begin(), B_.end() - 1);  // B times below T
  }

  // Largest deviation of P from the product of its class marginals.
  double factorization_gap() const {
    const std::uint32_t S = fam_.size();
    double gap = 0.0;
    for (std::uint32_t u = 0; u < S; ++u)
      for (std::uint32_t s = 0; s < S; ++s)
        gap = std::max(gap, std::abs(fam_(s, u) - pa(pack(s, A_), pack(u, B_)) * pb(pack(s, B_), pack(u, A_))));
    return gap;
  }

  void init(std::vector<double>& phi_odd, std::vector<double>& phi_even) const {
    phi_odd = PA_;
    phi_even = PB_;
    for (std::uint32_t b = 0; b < nB_; ++b)
      if (spin_at(unpack(b, B_), fam_.T) > 0)
        for (std::uint32_t ua = 0; ua < nA_; ++ua) phi_even[b * nA_ + ua] = 0.0;
  }

  void update(const std::vector<double>& phi_odd, const std::vector<double>& phi_even, std::vector<double>& new_odd,
              std::vector<double>& new_even) const {
    const int k = fam_.k, children = k - 1, cap = core_threshold(k), T = fam_.T;
    new_odd.assign(nA_ * nB_, 0.0);
    new_even.assign(nB_ * nA_, 0.0);
    // Odd update: children contribute their B class, conditioned on the parent's A spins.
    const std::size_t latB = ipow(static_cast<std::uint64_t>(k), static_cast<int>(B_inner_.size()));
    for (std::uint32_t a = 0; a < nA_; ++a) {
      std::vector<Atom> atoms;
      for (std::uint32_t cb = 0; cb < nB_; ++cb) {
        const double in = phi_even[cb * nA_ + a];
        atoms.push_back({count_offset(unpack(cb, B_), B_inner_, k), in, pb(cb, a) - in});
      }
      const auto g = core_convolution(atoms, children, latB, cap);
      const std::uint32_t sa = unpack(a, A_);
      const double w0 = (!A_.empty() && A_.front() == 0) ? p0(spin_at(sa, 0), fam_.theta) : 1.0;
      for (std::uint32_t ub = 0; ub < nB_; ++ub) {
        const std::uint32_t su = unpack(ub, B_);
        std::vector<int> s, uu;
        for (int t : B_inner_) {
          s.push_back(spin_at(sa, t + 1));
          uu.push_back(spin_at(su, t));
        }
        new_odd[a * nB_ + ub] = w0 * kernel_sum(g, k, children, s, uu);
      }
    }
    // Even update: children contribute their A class, conditioned on the parent's B spins.
    const std::size_t latA = ipow(static_cast<std::uint64_t>(k), static_cast<int>(A_.size()));
    for (std::uint32_t b = 0; b < nB_; ++b) {
      const std::uint32_t sb = unpack(b, B_);
      if (spin_at(sb, T) > 0) continue;
      std::vector<Atom> atoms;
      for (std::uint32_t ca = 0; ca < nA_; ++ca) {
        const double in = phi_odd[ca * nB_ + b];
        atoms.push_back({count_offset(unpack(ca, A_), A_, k), in, pa(ca, b) - in});
      }
      const auto g = core_convolution(atoms, children, latA, cap);
      const double w0 = (B_.front() == 0) ? p0(spin_at(sb, 0), fam_.theta) : 1.0;
      for (std::uint32_t ua = 0; ua < nA_; ++ua) {
        const std::uint32_t su = unpack(ua, A_);
        std::vector<int> s, uu;
        for (int t : A_) {
          s.push_back(spin_at(sb, t + 1));
          uu.push_back(spin_at(su, t));
        }
        new_even[b * nA_ + ua] = w0 * kernel_sum(g, k, children, s, uu);
      }
    }
  }

  void assemble(const std::vector<double>& phi_odd, const std::vector<double>& phi_even, PsiTables& psi) const {
    const std::uint32_t S = fam_.size();
    psi.odd.assign(static_cast<std::size_t>(S) * S, 0.0);
    psi.even.assign(static_cast<std::size_t>(S) * S, 0.0);
    for (std::uint32_t u = 0; u < S; ++u) {
      const std::uint32_t ua = pack(u, A_), ub = pack(u, B_);
      for (std::uint32_t s = 0; s < S; ++s) {
        const std::uint32_t a = pack(s, A_), b = pack(s, B_);
        psi.odd[u * S + s] = pb(b, ua) * phi_odd[a * nB_ + ub];
        psi.even[u * S + s] = pa(a, ub) * phi_even[b * nA_ + ua];
      }
    }
  }

  double pa(std::uint32_t a, std::uint32_t ub) const { return PA_[a * nB_ + ub]; }
  double pb(std::uint32_t b, std::uint32_t ua) const { return PB_[b * nA_ + ua]; }
  std::uint32_t nA() const { return nA_; }
  std::uint32_t nB() const { return nB_; }
  const std::vector<double>& PA() const { return PA_; }
  const std::vector<double>& PB() const { return PB_; }

 private:
  static std::uint32_t pack(std::uint32_t code, const std::vector<int>& times) {
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < times.size(); ++i)
      if ((code >> times[i]) & 1U) out |= 1U << i;
    return out;
  }
  static std::uint32_t unpack(std::uint32_t packed, const std::vector<int>& times) {
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < times.size(); ++i)
      if ((packed >> i) & 1U) out |= 1U << times[i];
    return out;
  }

  const ConditionalFamily& fam_;
  std::vector<int> A_, B_, B_inner_;
  std::uint32_t nA_ = 0, nB_ = 0;
  std::vector<double> PA_, PB_;
};

// Entrywise bookkeeping shared by both evaluation paths. `ref` bounds `x` from above.
struct StepStats {
  double sup_change = 0.0;
  double monotone = 0.0;
  double bound = 0.0;
};

void check_and_clamp(std::vector<double>& x, const std::vector<double>& old, const std::vector<double>& ref,
                     double slack, StepStats& st) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double over = x[i] - ref[i];
    const double under = -x[i];
    st.bound = std::max({st.bound, over, under});
    st.monotone = std::max(st.monotone, x[i] - old[i]);
    if (over > slack || under > slack || x[i] - old[i] > slack)
      throw NumericalError("psi iteration left [0, P] or increased beyond numerical slack");
    x[i] = std::clamp(x[i], 0.0, std::min(ref[i], old[i]));
    st.sup_change = std::max(st.sup_change, old[i] - x[i]);
  }
}

// Geometric extrapolation of the odd tables. The odd and even classes alternate, so
// the one-step sup-change ratio oscillates; rates are taken over two steps instead:
// Lambda = (c_d + c_{d-1}) / (c_{d-2} + c_{d-3}) and each entry still has to lose
// (x_{d-2} - x_d) * Lambda / (1 - Lambda). For a pure geometric decay with per-step
// rate lambda this is the usual delta * lambda / (1 - lambda).
class DecayTracker {
 public:
  void push(const std::vector<double>& x, double change) {
    older_ = std::move(old_);
    old_ = x;
    for (int i = 3; i > 0; --i) c_[i] = c_[i - 1];
    c_[0] = change;
    ++steps_;
  }
  // Smallest extrapolated entry relative to its bound `ref`; zero-probability entries are skipped.
  // Call with the newest table after push() recorded its predecessor.
  double margin(const std::vector<double>& x, const std::vector<double>& ref) const {
    double f = 0.0;
    const double den = c_[2] + c_[3];
    if (steps_ >= 4 && den > 0.0 && older_.size() == x.size()) {
      const double lambda = std::clamp((c_[0] + c_[1]) / den, 0.0, 1.0 - 1e-12);
      f = lambda / (1.0 - lambda);
    }
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (ref[i] <= 0.0) continue;
      const double rest = f > 0.0 ? (older_[i] - x[i]) * f : 0.0;
      m = std::min(m, (x[i] - rest) / ref[i]);
    }
    return m;
  }

 private:
  std::vector<double> old_, older_;  // tables at d-1 and d-2 relative to the newest
  double c_[4] = {0.0, 0.0, 0.0, 0.0};
  long steps_ = 0;
};

}  // namespace

double bipartite_factorization_gap(const ConditionalFamily& fam) { return BipartitePsi(fam).factorization_gap(); }

PsiTables psi_iterate(const ConditionalFamily& fam, const PsiOptions& opts) {
  PsiTables psi = psi_initial(fam);
  if (!opts.bipartite) {
    PsiTables cur = psi;
    DecayTracker tracker;
    for (long d = 1; d <= opts.d_max; ++d) {
      PsiTables nxt = psi_update_direct(fam, cur);
      StepStats st;
      check_and_clamp(nxt.odd, cur.odd, fam.table, opts.slack, st);
      check_and_clamp(nxt.even, cur.even, fam.table, opts.slack, st);
      nxt.max_monotone_violation = std::max(cur.max_monotone_violation, st.monotone);
      nxt.max_bound_violation = std::max(cur.max_bound_violation, st.bound);
      nxt.prev_sup_change = cur.sup_change;
      nxt.sup_change = st.sup_change;
      nxt.min_odd = relative_min(nxt.odd, fam.table);
      tracker.push(cur.odd, nxt.sup_change);
      cur = std::move(nxt);
      if (cur.min_odd <= opts.eps_positive) {
        cur.hit_floor = true;
        break;
      }
      if (cur.sup_change < opts.eps_converge) {
        cur.converged = true;
        break;
      }
    }
    cur.margin = cur.hit_floor ? cur.min_odd : tracker.margin(cur.odd, fam.table);
    return cur;
  }

  BipartitePsi bp(fam);
  std::vector<double> po, pe, no, ne;
  bp.init(po, pe);
  DecayTracker tracker;
  // Ψ entries are Φ entries scaled by class marginals; track extremes of those marginals.
  const double maxPB = *std::max_element(bp.PB().begin(), bp.PB().end());
  const double maxPA = *std::max_element(bp.PA().begin(), bp.PA().end());
  std::vector<double> pa_ref(bp.nA() * bp.nB()), pb_ref(bp.nB() * bp.nA());
  for (std::uint32_t a = 0; a < bp.nA(); ++a)
    for (std::uint32_t ub = 0; ub < bp.nB(); ++ub) pa_ref[a * bp.nB() + ub] = bp.pa(a, ub);
  for (std::uint32_t b = 0; b < bp.nB(); ++b)
    for (std::uint32_t ua = 0; ua < bp.nA(); ++ua) pb_ref[b * bp.nA() + ua] = bp.pb(b, ua);

  double change = 0.0, prev_change = 0.0, mono = 0.0, bound = 0.0;
  long d = 0;
  bool converged = false, floor_hit = false;
  // Psi_odd / P equals Phi_odd / P_A entrywise, so relative tests run on Phi directly.
  double min_odd = relative_min(po, pa_ref);
  for (d = 1; d <= opts.d_max; ++d) {
    bp.update(po, pe, no, ne);
    StepStats so, se;
    check_and_clamp(no, po, pa_ref, opts.slack, so);
    check_and_clamp(ne, pe, pb_ref, opts.slack, se);
    prev_change = change;
    change = std::max(so.sup_change * maxPB, se.sup_change * maxPA);
    mono = std::max({mono, so.monotone * maxPB, se.monotone * maxPA});
    bound = std::max({bound, so.bound * maxPB, se.bound * maxPA});
    tracker.push(po, change);
    po.swap(no);
    pe.swap(ne);
    min_odd = relative_min(po, pa_ref);
    if (min_odd <= opts.eps_positive) {
      floor_hit = true;
      break;
    }
    if (change < opts.eps_converge) {
      converged = true;
      break;
    }
  }
  bp.assemble(po, pe, psi);
  psi.d = static_cast<int>(std::min(d, opts.d_max));
  psi.sup_change = change;
  psi.prev_sup_change = prev_change;
  psi.converged = converged;
  psi.hit_floor = floor_hit;
  psi.min_odd = relative_min(psi.odd, fam.table);
  psi.max_monotone_violation = mono;
  psi.max_bound_violation = bound;
  psi.margin = floor_hit ? min_odd : tracker.margin(po, pa_ref);
  return psi;
}

bool psi_positive(int k, int T, double theta, const ThetaLbOptions& opts, PsiTables* out) {
  const ConditionalFamily fam = exact_root_distribution(k, T, theta, opts.exact);
  PsiTables psi = psi_iterate(fam, opts.psi);
  const bool positive = !psi.hit_floor && psi.margin > opts.psi.eps_positive;
  if (out) *out = std::move(psi);
  return positive;
}

ThetaLbResult theta_lb(int k, int T, const ThetaLbOptions& opts) {
  if (k < 3) throw UsageError("k must be at least 3");
  ThetaLbResult res;
  res.k = k;
  res.T = T;
  double lo = -1.0, hi = 1.0;
  PsiTables last_positive;
  bool have_positive = false;
  while (hi - lo > opts.bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    PsiTables psi;
    const bool pos = psi_positive(k, T, mid, opts, &psi);
    res.d_used = std::max<long>(res.d_used, psi.d);
    res.max_monotone_violation = std::max(res.max_monotone_violation, psi.max_monotone_violation);
    res.max_bound_violation = std::max(res.max_bound_violation, psi.max_bound_violation);
    if (!psi.converged && !psi.hit_floor) res.converged = false;
    if (pos) {
      lo = mid;
      last_positive = std::move(psi);
      have_positive = true;
    } else {
      hi = mid;
    }
  }
  res.lo = lo;
  res.hi = hi;
  res.theta_lb = 0.5 * (lo + hi);
  if (have_positive) {
    res.margin = last_positive.margin;
    res.sup_change = last_positive.sup_change;
  }
  return res;
}

HatTables full_tree_psi(const ConditionalFamily& fam, const PsiTables& psi) {
  const int k = fam.k, T = fam.T, cap = (k + 2) / 2;  // ceil((k+1)/2) of k children
  const std::uint32_t S = fam.size();
  std::vector<int> times(T);
  for (int t = 0; t < T; ++t) times[t] = t;
  const int radix = k + 1;
  const std::size_t lattice = ipow(static_cast<std::uint64_t>(radix), T);
  HatTables hat{std::vector<double>(S, 0.0), std::vector<double>(S, 0.0)};
  for (std::uint32_t so = 0; so < S; ++so) {
    std::vector<Atom> odd_atoms, even_atoms;
    for (std::uint32_t c = 0; c < S; ++c) {
      const std::uint32_t off = count_offset(c, times, radix);
      const double p = fam(c, so);
      odd_atoms.push_back({off, psi.even[so * S + c], p - psi.even[so * S + c]});
      even_atoms.push_back({off, psi.odd[so * S + c], p - psi.odd[so * S + c]});
    }
    std::vector<int> s(T), none(T, 0);
    for (int t = 0; t < T; ++t) s[t] = spin_at(so, t + 1);
    const double w0 = p0(spin_at(so, 0), fam.theta);
    hat.odd[so] = w0 * kernel_sum(core_convolution(odd_atoms, k, lattice, cap), radix, k, s, none);
    if (spin_at(so, T) < 0)
      hat.even[so] = w0 * kernel_sum(core_convolution(even_atoms, k, lattice, cap), radix, k, s, none);
  }
  return hat;
}

void write_psi_csv(std::ostream& out, const PsiTables& psi) {
  const std::uint32_t S = 1U << (psi.T + 1);
  out << "sigma_code,u_code,psi_odd,psi_even\n" << std::setprecision(17);
  for (std::uint32_t u = 0; u < S; ++u)
    for (std::uint32_t s = 0; s < S; ++s)
      out << s << ',' << u << ',' << psi.odd[u * S + s] << ',' << psi.even[u * S + s] << '\n';
}

}  // namespace majority
