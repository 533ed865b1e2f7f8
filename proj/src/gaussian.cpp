#include "majority/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/erf.hpp>

namespace majority {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -INFINITY;
  if (p >= 1.0) return INFINITY;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

SlicePartition SlicePartition::orthant(const std::vector<int>& signs) {
  SlicePartition p;
  for (int s : signs) p.side.push_back(s > 0 ? Side::Plus : Side::Minus);
  return p;
}

int SlicePartition::pinned_count() const {
  return static_cast<int>(std::count(side.begin(), side.end(), Side::Pinned));
}

GaussianSpec select(const GaussianSpec& spec, const std::vector<int>& idx) {
  const int m = static_cast<int>(idx.size());
  GaussianSpec out{Eigen::VectorXd(m), Eigen::MatrixXd(m, m)};
  for (int i = 0; i < m; ++i) {
    out.mean(i) = spec.mean(idx[i]);
    for (int j = 0; j < m; ++j) out.cov(i, j) = spec.cov(idx[i], idx[j]);
  }
  return out;
}

GaussianSpec conditional_reduce(const GaussianSpec& spec, int pinned) {
  const int d = static_cast<int>(spec.mean.size());
  if (pinned < 0 || pinned >= d) throw UsageError("pinned index out of range");
  const double var = spec.cov(pinned, pinned);
  if (!(var > 0.0)) throw NotPositiveDefinite("pinned coordinate has zero variance");
  std::vector<int> rest;
  for (int i = 0; i < d; ++i)
    if (i != pinned) rest.push_back(i);
  GaussianSpec out = select(spec, rest);
  const double m0 = spec.mean(pinned);
  for (int i = 0; i < d - 1; ++i) {
    const double ci = spec.cov(rest[i], pinned);
    out.mean(i) -= ci / var * m0;
    for (int j = 0; j < d - 1; ++j) out.cov(i, j) -= ci * spec.cov(rest[j], pinned) / var;
  }
  return out;
}

namespace {

constexpr double kJitter = 1e-10;

// Cholesky factor after the PD check; records jitter in `method`.
Eigen::MatrixXd robust_cholesky(Eigen::MatrixXd cov, std::string& method) {
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kJitter) {
    cov.diagonal().array() += kJitter;
    method += "+jitter";
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(cov, Eigen::EigenvaluesOnly);
    if (es2.eigenvalues().minCoeff() <= 0.0) throw NotPositiveDefinite("covariance is not positive definite");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("Cholesky factorization failed");
  return llt.matrixL();
}

const double kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

// Integrand of the separation-of-variables transform for P(z >= 0), z = mean + L e.
class GenzIntegrand {
 public:
  GenzIntegrand(const Eigen::VectorXd& mean, const Eigen::MatrixXd& L) : mean_(mean), L_(L), e_(mean.size()) {}
  int dim() const { return static_cast<int>(mean_.size()); }
  double operator()(const double* w) {
    const int d = dim();
    double f = 1.0;
    for (int i = 0; i < d; ++i) {
      double s = mean_(i);
      for (int j = 0; j < i; ++j) s += L_(i, j) * e_(j);
      // e_i must exceed a = -s / L_ii
      const double a = -s / L_(i, i);
      const double p = normal_cdf(-a);
      f *= p;
      if (f == 0.0) return 0.0;
      // -e_i is a normal truncated above at -a; sample it by inversion
      if (i + 1 < d) e_(i) = -normal_quantile(std::clamp(w[i] * p, 1e-300, 1.0 - 1e-16));
    }
    return f;
  }

 private:
  const Eigen::VectorXd& mean_;
  const Eigen::MatrixXd& L_;
  Eigen::VectorXd e_;
};

SliceResult orthant_qmc(const Eigen::VectorXd& mean, const Eigen::MatrixXd& L, const SliceOptions& opts,
                        std::string method) {
  const int d = static_cast<int>(mean.size());
  GenzIntegrand f(mean, L);
  const int s = d - 1;
  if (s > static_cast<int>(std::size(kPrimes))) throw UsageError("dimension too large for lattice rule");
  std::vector<double> alpha(s);
  for (int j = 0; j < s; ++j) alpha[j] = std::sqrt(kPrimes[j]) - std::floor(std::sqrt(kPrimes[j]));
  Rng rng(RandomSeed{opts.seed, 0x9a55ULL});
  const int M = std::max(opts.shifts, 2);
  std::vector<std::vector<double>> shift(M, std::vector<double>(s));
  for (auto& sh : shift)
    for (auto& x : sh) x = rng.uniform();
  std::vector<double> w(std::max(s, 1));
  std::vector<KahanSum> acc(M);
  std::uint64_t n_done = 0;
  std::uint64_t n_target = 512;
  SliceResult res;
  res.method = method + "+qmc";
  while (true) {
    for (int m = 0; m < M; ++m) {
      for (std::uint64_t n = n_done; n < n_target; ++n) {
        for (int j = 0; j < s; ++j) {
          double x = std::fmod(static_cast<double>(n + 1) * alpha[j] + shift[m][j], 1.0);
          w[j] = 1.0 - std::abs(2.0 * x - 1.0);  // tent (baker) periodization
        }
        acc[m].add(f(w.data()));
      }
    }
    n_done = n_target;
    double mean_est = 0.0;
    std::vector<double> est(M);
    for (int m = 0; m < M; ++m) {
      est[m] = acc[m].value() / static_cast<double>(n_done);
      mean_est += est[m];
    }
    mean_est /= M;
    double var = 0.0;
    for (double e : est) var += (e - mean_est) * (e - mean_est);
    var /= static_cast<double>(M) * (M - 1);
    res.value = mean_est;
    res.std_error = std::sqrt(var);
    if (res.std_error <= opts.target_std_error) return res;
    if (2 * n_target * M > opts.max_points) break;
    n_target *= 2;
  }
  if (opts.strict) throw AccuracyNotReached("slice probability did not reach the requested accuracy");
  return res;
}

SliceResult orthant_mc(const Eigen::VectorXd& mean, const Eigen::MatrixXd& L, const SliceOptions& opts,
                       std::string method) {
  const int d = static_cast<int>(mean.size());
  Rng rng(RandomSeed{opts.seed, 0x3c0ULL});
  std::normal_distribution<double> nd;
  Eigen::VectorXd e(d), z(d);
  std::uint64_t hits = 0, n = 0;
  // Enough draws for the target under the worst-case variance 1/4, within the budget.
  const double needed = 0.25 / (opts.target_std_error * opts.target_std_error);
  const std::uint64_t total = static_cast<std::uint64_t>(std::min<double>(needed, static_cast<double>(opts.max_points)));
  for (; n < std::max<std::uint64_t>(total, 1000); ++n) {
    for (int i = 0; i < d; ++i) e(i) = nd(rng);
    z.noalias() = mean + L * e;
    if ((z.array() >= 0.0).all()) ++hits;
  }
  SliceResult res;
  res.method = method + "+mc";
  res.value = static_cast<double>(hits) / static_cast<double>(n);
  res.std_error = std::sqrt(std::max(res.value * (1 - res.value), 1e-300) / static_cast<double>(n));
  return res;
}

}  // namespace

SliceResult slice_prob(const GaussianSpec& spec, const SlicePartition& part, const SliceOptions& opts) {
  const int d = static_cast<int>(spec.mean.size());
  if (static_cast<int>(part.dim()) != d || spec.cov.rows() != d || spec.cov.cols() != d)
    throw UsageError("slice dimensions do not match");
  if (part.pinned_count() > 1) throw UsageError("at most one pinned coordinate is supported");

  // Drop free coordinates, remembering the pinned one.
  std::vector<int> keep;
  int pinned = -1;
  for (int i = 0; i < d; ++i) {
    if (part.side[i] == Side::Free) continue;
    if (part.side[i] == Side::Pinned) pinned = static_cast<int>(keep.size());
    keep.push_back(i);
  }
  GaussianSpec work = select(spec, keep);
  std::vector<Side> sides;
  for (int i : keep) sides.push_back(part.side[i]);

  double factor = 1.0;
  std::string method = "sov";
  if (pinned >= 0) {
    const double var = work.cov(pinned, pinned);
    if (!(var > 0.0)) throw NotPositiveDefinite("pinned coordinate has zero variance");
    factor = normal_pdf(work.mean(pinned) / std::sqrt(var)) / std::sqrt(var);
    work = conditional_reduce(work, pinned);
    sides.erase(sides.begin() + pinned);
  }
  // Reflect Minus coordinates so that every constraint reads z >= 0.
  const int m = static_cast<int>(sides.size());
  for (int i = 0; i < m; ++i)
    if (sides[i] == Side::Minus) {
      work.mean(i) = -work.mean(i);
      work.cov.row(i) *= -1.0;
      work.cov.col(i) *= -1.0;
    }

  SliceResult res;
  if (m == 0) {
    res.value = factor;
    res.method = "closed-form";
    return res;
  }
  if (m == 1) {
    const double var = work.cov(0, 0);
    if (!(var > 0.0)) throw NotPositiveDefinite("zero variance");
    res.value = factor * normal_cdf(work.mean(0) / std::sqrt(var));
    res.method = "closed-form";
    return res;
  }
  Eigen::MatrixXd L = robust_cholesky(work.cov, method);
  SliceOptions inner = opts;
  if (factor > 0.0) inner.target_std_error = opts.target_std_error / factor;
  res = opts.method == SliceMethod::PlainMonteCarlo ? orthant_mc(work.mean, L, inner, method)
                                                    : orthant_qmc(work.mean, L, inner, method);
  res.value *= factor;
  res.std_error *= factor;
  return res;
}

}  // namespace majority
