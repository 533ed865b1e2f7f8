#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace majority {

// Error categories map onto CLI exit codes: usage 1, numerical 2, resource cap 3.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RandomSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-mode hash of a seed and two counters; the basis of every derived stream.
inline std::uint64_t hash3(std::uint64_t s, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(s) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

inline std::uint64_t seed_word(const RandomSeed& rs) { return hash3(rs.seed, rs.stream, 0x5eedULL); }

// Substream for work item i under a parent seed; independent of worker count.
inline RandomSeed derive(const RandomSeed& parent, std::uint64_t item) {
  return RandomSeed{seed_word(parent), item};
}

// Small fast generator for inner loops (xoshiro256**), seeded through splitmix64.
class Rng {
 public:
  using result_type = std::uint64_t;
  explicit Rng(const RandomSeed& rs) {
    std::uint64_t x = seed_word(rs);
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      w = splitmix64(x);
    }
  }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() {
    const std::uint64_t out = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }
  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Trajectory codes: bit t set iff sigma(t) = +1.
inline int spin_at(std::uint32_t code, int t) { return ((code >> t) & 1U) ? 1 : -1; }
inline std::uint32_t with_spin(std::uint32_t code, int t, int s) {
  return s > 0 ? (code | (1U << t)) : (code & ~(1U << t));
}
std::string trajectory_string(std::uint32_t code, int length);

// Neumaier-compensated accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

std::string fnv1a64_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

// Fixed-order parallel map: fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace majority
