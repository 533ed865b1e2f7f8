#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "majority/gaussian.hpp"

namespace majority {

enum class LatticeConvention { ZeroOne, PlusMinus };

// Sum of N i.i.d. vectors X_i on {0,1}^d (or {-1,+1}^d); cell index bit j = coordinate j is 1 (+1).
struct LatticeSumSpec {
  int d = 1;
  int N = 0;
  std::vector<double> cell_probs;  // size 2^d
  std::vector<long> a;             // target lattice point, in the declared convention
  SlicePartition partition;
  double B = 0.0;                  // declared lower-bound constant: every cell >= 1/B
  LatticeConvention convention = LatticeConvention::ZeroOne;
};

struct CltComparison {
  double exact = 0.0;
  double approx = 0.0;
  double rel_err = 0.0;
  double bound_ratio = 0.0;  // |rel_err| * N^{1/(2|I0|+2)}
};

void validate(const LatticeSumSpec& spec);

double exact_lattice_prob(const LatticeSumSpec& spec, std::uint64_t state_cap = 200000000ULL);

CltComparison clt_compare(const LatticeSumSpec& spec, const SliceOptions& opts = {});

void write_clt_csv_header(std::ostream& out);
void write_clt_csv_row(std::ostream& out, const LatticeSumSpec& spec, const CltComparison& c);

}  // namespace majority
