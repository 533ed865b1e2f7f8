#include <doctest.h>

#include <cmath>
#include <sstream>

#include "majority/cltcheck.hpp"

using namespace majority;

namespace {

double binom_pmf(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
}

double binom_upper(int n, int k, double p) {
  double s = 0.0;
  for (int j = std::max(k, 0); j <= n; ++j) s += binom_pmf(n, j, p);
  return s;
}

LatticeSumSpec spec1(int N, double p, long a, Side s) {
  LatticeSumSpec sp;
  sp.d = 1;
  sp.N = N;
  sp.cell_probs = {1 - p, p};
  sp.a = {a};
  sp.partition = SlicePartition{{s}};
  return sp;
}

bool holds(Side s, long x, long a) {
  switch (s) {
    case Side::Plus: return x >= a;
    case Side::Minus: return x <= a;
    case Side::Pinned: return x == a;
    case Side::Free: return true;
  }
  return false;
}

// Multinomial enumeration over the four cells of a two-dimensional step.
double brute2(const LatticeSumSpec& sp) {
  const int N = sp.N;
  double total = 0.0;
  for (int n0 = 0; n0 <= N; ++n0)
    for (int n1 = 0; n0 + n1 <= N; ++n1)
      for (int n2 = 0; n0 + n1 + n2 <= N; ++n2) {
        const int n3 = N - n0 - n1 - n2;
        const long x = n1 + n3, y = n2 + n3;  // bit 0 and bit 1
        if (!holds(sp.partition.side[0], x, sp.a[0]) || !holds(sp.partition.side[1], y, sp.a[1])) continue;
        double lw = std::lgamma(N + 1.0) - std::lgamma(n0 + 1.0) - std::lgamma(n1 + 1.0) - std::lgamma(n2 + 1.0) -
                    std::lgamma(n3 + 1.0);
        lw += n0 * std::log(sp.cell_probs[0]) + n1 * std::log(sp.cell_probs[1]) + n2 * std::log(sp.cell_probs[2]) +
              n3 * std::log(sp.cell_probs[3]);
        total += std::exp(lw);
      }
  return total;
}

}  // namespace

TEST_CASE("exact central binomial") {
  CHECK(exact_lattice_prob(spec1(100, 0.5, 50, Side::Pinned)) == doctest::Approx(0.0795892).epsilon(1e-6));
  CHECK(exact_lattice_prob(spec1(37, 0.3, 11, Side::Pinned)) == doctest::Approx(binom_pmf(37, 11, 0.3)).epsilon(1e-12));
  CHECK(exact_lattice_prob(spec1(37, 0.3, 9, Side::Plus)) == doctest::Approx(binom_upper(37, 9, 0.3)).epsilon(1e-12));
  CHECK(exact_lattice_prob(spec1(37, 0.3, 9, Side::Minus)) ==
        doctest::Approx(1.0 - binom_upper(37, 10, 0.3)).epsilon(1e-12));
}

TEST_CASE("trivial half-spaces") {
  CHECK(exact_lattice_prob(spec1(50, 0.4, 0, Side::Plus)) == doctest::Approx(1.0));
  CHECK(exact_lattice_prob(spec1(50, 0.4, 50, Side::Minus)) == doctest::Approx(1.0));
  CHECK(exact_lattice_prob(spec1(50, 0.4, 51, Side::Plus)) == 0.0);
  CHECK(exact_lattice_prob(spec1(50, 0.4, 20, Side::Free)) == doctest::Approx(1.0));
}

TEST_CASE("independent coordinates factorize") {
  const double p = 0.3, q = 0.6;
  LatticeSumSpec sp;
  sp.d = 2;
  sp.N = 40;
  sp.cell_probs = {(1 - p) * (1 - q), p * (1 - q), (1 - p) * q, p * q};
  sp.a = {12, 25};
  sp.partition = SlicePartition{{Side::Pinned, Side::Plus}};
  CHECK(exact_lattice_prob(sp) == doctest::Approx(binom_pmf(40, 12, p) * binom_upper(40, 25, q)).epsilon(1e-10));
}

TEST_CASE("correlated two-dimensional sums match multinomial enumeration") {
  LatticeSumSpec sp;
  sp.d = 2;
  sp.N = 18;
  sp.cell_probs = {0.35, 0.1, 0.15, 0.4};
  for (Side s0 : {Side::Plus, Side::Minus, Side::Pinned})
    for (Side s1 : {Side::Plus, Side::Minus, Side::Pinned, Side::Free}) {
      sp.a = {9, 10};
      sp.partition = SlicePartition{{s0, s1}};
      CHECK(exact_lattice_prob(sp) == doctest::Approx(brute2(sp)).epsilon(1e-10));
    }
}

TEST_CASE("Gaussian approximation of the central binomial") {
  const CltComparison c = clt_compare(spec1(100, 0.5, 50, Side::Pinned));
  CHECK(c.approx == doctest::Approx(0.0797885).epsilon(1e-5));
  CHECK(c.rel_err == doctest::Approx(0.0025).epsilon(0.05));
  CHECK(c.bound_ratio == doctest::Approx(std::abs(c.rel_err) * std::pow(100.0, 0.25)));
}

TEST_CASE("relative error shrinks with N") {
  SliceOptions o;
  o.target_std_error = 1e-9;
  const CltComparison a = clt_compare(spec1(100, 0.3, 30, Side::Pinned), o);
  const CltComparison b = clt_compare(spec1(400, 0.3, 120, Side::Pinned), o);
  CHECK(std::abs(b.rel_err) * 1.3 <= std::abs(a.rel_err));

  LatticeSumSpec sp;
  sp.d = 2;
  sp.cell_probs = {0.3, 0.2, 0.2, 0.3};
  sp.partition = SlicePartition{{Side::Pinned, Side::Plus}};
  sp.N = 64;
  sp.a = {32, 32};
  const CltComparison c = clt_compare(sp, o);
  sp.N = 512;
  sp.a = {256, 256};
  const CltComparison d = clt_compare(sp, o);
  CHECK(std::abs(d.rel_err) < std::abs(c.rel_err));
}

TEST_CASE("symmetric half-space is near one half") {
  const CltComparison c = clt_compare(spec1(201, 0.5, 101, Side::Plus));
  CHECK(c.approx == doctest::Approx(0.5).epsilon(0.02));
  CHECK(c.exact == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("plus-minus convention") {
  LatticeSumSpec pm = spec1(100, 0.5, 0, Side::Pinned);
  pm.convention = LatticeConvention::PlusMinus;
  CHECK(exact_lattice_prob(pm) == doctest::Approx(exact_lattice_prob(spec1(100, 0.5, 50, Side::Pinned))));
  pm.a = {1};
  CHECK_THROWS_AS(validate(pm), UsageError);
}

TEST_CASE("validation and caps") {
  LatticeSumSpec bad = spec1(10, 0.5, 5, Side::Pinned);
  bad.cell_probs = {0.5, 0.6};
  CHECK_THROWS_AS(validate(bad), UsageError);
  LatticeSumSpec small = spec1(10, 0.05, 1, Side::Pinned);
  small.B = 4.0;
  CHECK_THROWS_AS(validate(small), UsageError);
  LatticeSumSpec far = spec1(100, 0.5, 95, Side::Pinned);
  far.B = 4.0;
  CHECK_THROWS_AS(validate(far), UsageError);
  LatticeSumSpec dim = spec1(10, 0.5, 5, Side::Pinned);
  dim.d = 4;
  CHECK_THROWS_AS(validate(dim), UsageError);
  CHECK_THROWS_AS(exact_lattice_prob(spec1(100, 0.5, 50, Side::Pinned), 10), ResourceCapError);
}

TEST_CASE("csv row") {
  std::ostringstream out;
  write_clt_csv_header(out);
  const auto sp = spec1(20, 0.5, 10, Side::Pinned);
  write_clt_csv_row(out, sp, clt_compare(sp));
  CHECK(out.str().rfind("d,N,K,exact,approx,err,bound-ratio\n1,20,1,", 0) == 0);
}
