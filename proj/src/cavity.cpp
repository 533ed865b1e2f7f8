#include "majority/cavity.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>

#include <json.hpp>

namespace majority {

namespace {

// One parity chain ending at time tau: the spins at tau, tau-2, ... and the noises
// eta(r) with r = s-1 for each such spin s >= 1. sigma(0) belongs to the chain of even tau.
struct Chain {
  int tau = 0;
  std::vector<int> spin_times;   // ascending
  std::vector<int> noise_times;  // ascending; noise_times[i] drives spin noise_times[i]+1
  bool has_origin = false;
};

Chain make_chain(int tau) {
  Chain c;
  c.tau = tau;
  for (int s = tau % 2; s <= tau; s += 2) {
    c.spin_times.push_back(s);
    if (s >= 1) c.noise_times.push_back(s - 1);
  }
  c.has_origin = (tau % 2 == 0);
  return c;
}

// Gaussian law of the chain's noises given a spin assignment `code` (bit t = sigma(t)).
GaussianSpec chain_spec(const Eigen::MatrixXd& C, const Eigen::MatrixXd& R, const Chain& ch, std::uint32_t code,
                        const std::vector<double>& h) {
  const int m = static_cast<int>(ch.noise_times.size());
  GaussianSpec g{Eigen::VectorXd::Zero(m), Eigen::MatrixXd(m, m)};
  for (int i = 0; i < m; ++i) {
    const int r = ch.noise_times[i];
    double mu = r < static_cast<int>(h.size()) ? h[r] : 0.0;
    for (int s : ch.spin_times)
      if (s < r) mu += R(r, s) * spin_at(code, s);
    g.mean(i) = mu;
    for (int j = 0; j < m; ++j) g.cov(i, j) = C(r, ch.noise_times[j]);
  }
  return g;
}

SlicePartition chain_orthant(const Chain& ch, std::uint32_t code) {
  SlicePartition p;
  for (int r : ch.noise_times) p.side.push_back(spin_at(code, r + 1) > 0 ? Side::Plus : Side::Minus);
  return p;
}

// All spin assignments of a chain, as trajectory codes with only chain bits set/cleared.
std::vector<std::uint32_t> chain_assignments(const Chain& ch) {
  std::vector<std::uint32_t> out;
  const int n = static_cast<int>(ch.spin_times.size());
  for (std::uint32_t a = 0; a < (1U << n); ++a) {
    std::uint32_t code = 0;
    for (int i = 0; i < n; ++i)
      if ((a >> i) & 1U) code |= 1U << ch.spin_times[i];
    out.push_back(code);
  }
  return out;
}

double chain_weight(const Chain& ch) { return ch.has_origin ? 0.5 : 1.0; }

struct Estimate {
  double value = 0.0;
  double var = 0.0;
  void add(double w, const SliceResult& r) {
    value += w * r.value;
    var += w * w * r.std_error * r.std_error;
  }
  double err() const { return std::sqrt(var); }
};

std::uint64_t integral_seed(std::uint64_t seed, int tau, int s, std::uint32_t code) {
  return hash3(seed, static_cast<std::uint64_t>(tau) * 1024 + static_cast<std::uint64_t>(s + 1), code);
}

}  // namespace

CavityKernels compute_kernels(int T_max, double accuracy, std::uint64_t seed, int threads) {
  if (T_max < 0) throw UsageError("horizon must be non-negative");
  if (!(accuracy > 0.0)) throw UsageError("accuracy must be positive");
  CavityKernels K;
  K.T = T_max;
  K.accuracy = accuracy;
  K.seed = seed;
  const int n = T_max + 1;
  K.C = Eigen::MatrixXd::Identity(n, n);
  K.R = Eigen::MatrixXd::Zero(n, n);
  K.C_err = Eigen::MatrixXd::Zero(n, n);
  K.R_err = Eigen::MatrixXd::Zero(n, n);
  const std::vector<double> no_field;

  for (int t = 0; t + 1 <= T_max; ++t) {
    const int tau = t + 1;
    const Chain ch = make_chain(tau);
    const auto assignments = chain_assignments(ch);
    const double w = chain_weight(ch);
    const double per = accuracy / std::sqrt(static_cast<double>(assignments.size()));

    // Orthant masses feed every C(tau, s); pinned integrals feed R(tau, r).
    const std::size_t m = ch.noise_times.size();
    std::vector<SliceResult> mass(assignments.size());
    std::vector<std::vector<SliceResult>> pinned(assignments.size(), std::vector<SliceResult>(m));
    parallel_for(assignments.size(), threads, [&](std::size_t a) {
      const std::uint32_t code = assignments[a];
      GaussianSpec g = chain_spec(K.C, K.R, ch, code, no_field);
      SliceOptions opts;
      opts.target_std_error = per;
      opts.seed = integral_seed(seed, tau, -1, code);
      try {
        mass[a] = slice_prob(g, chain_orthant(ch, code), opts);
        for (std::size_t j = 0; j < m; ++j) {
          SlicePartition p = chain_orthant(ch, code);
          p.side[j] = Side::Pinned;
          opts.seed = integral_seed(seed, tau, ch.noise_times[j], code);
          pinned[a][j] = slice_prob(g, p, opts);
        }
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at row t=" + std::to_string(tau));
      }
    });

    for (int s : ch.spin_times) {
      if (s == tau) continue;
      Estimate est;
      for (std::size_t a = 0; a < assignments.size(); ++a)
        est.add(w * spin_at(assignments[a], tau) * spin_at(assignments[a], s), mass[a]);
      K.C(tau, s) = K.C(s, tau) = est.value;
      K.C_err(tau, s) = K.C_err(s, tau) = est.err();
    }
    for (std::size_t j = 0; j < m; ++j) {
      const int r = ch.noise_times[j];
      Estimate est;
      for (std::size_t a = 0; a < assignments.size(); ++a)
        est.add(w * spin_at(assignments[a], tau) * spin_at(assignments[a], r + 1), pinned[a][j]);
      K.R(tau, r) = est.value;
      K.R_err(tau, r) = est.err();
    }
    if (!(K.R(tau, t) > 0.0)) throw NumericalError("R(t+1,t) is not positive at t=" + std::to_string(t));
  }
  return K;
}

EffectiveProcessParams effective_params(const CavityKernels& kernels, std::vector<double> h) {
  return EffectiveProcessParams{kernels.C, kernels.R, std::move(h)};
}

namespace {

class EffectiveSampler {
 public:
  EffectiveSampler(const EffectiveProcessParams& p, int horizon) : p_(p), horizon_(horizon) {
    if (horizon < 0) throw UsageError("horizon must be non-negative");
    if (horizon > 0) {
      if (p.C.rows() < horizon || p.R.rows() < horizon) throw UsageError("kernels too short for horizon");
      Eigen::LLT<Eigen::MatrixXd> llt(p.C.topLeftCorner(horizon, horizon));
      if (llt.info() != Eigen::Success) throw NotPositiveDefinite("C is not positive definite");
      L_ = llt.matrixL();
    }
    e_.resize(horizon);
    eta_.resize(horizon);
  }

  std::uint32_t draw(Rng& rng) {
    std::uint32_t code = (rng() >> 63) ? 1U : 0U;
    for (int i = 0; i < horizon_; ++i) e_(i) = nd_(rng);
    if (horizon_ > 0) eta_.noalias() = L_.triangularView<Eigen::Lower>() * e_;
    for (int t = 0; t < horizon_; ++t) {
      double x = eta_(t) + (t < static_cast<int>(p_.h.size()) ? p_.h[t] : 0.0);
      for (int s = 0; s < t; ++s) x += p_.R(t, s) * spin_at(code, s);
      if (x >= 0.0) code |= 1U << (t + 1);
    }
    return code;
  }

 private:
  const EffectiveProcessParams& p_;
  int horizon_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd e_, eta_;
  std::normal_distribution<double> nd_;
};

}  // namespace

std::uint32_t sample_effective(const EffectiveProcessParams& params, int horizon, const RandomSeed& seed) {
  EffectiveSampler s(params, horizon);
  Rng rng(seed);
  return s.draw(rng);
}

std::vector<std::uint32_t> sample_effective_many(const EffectiveProcessParams& params, int horizon,
                                                 std::uint64_t count, const RandomSeed& seed) {
  EffectiveSampler s(params, horizon);
  Rng rng(seed);
  std::vector<std::uint32_t> out(count);
  for (auto& c : out) c = s.draw(rng);
  return out;
}

double trajectory_prob(const CavityKernels& kernels, std::uint32_t code, int length, double accuracy,
                       std::uint64_t seed) {
  if (length < 1) throw UsageError("trajectory length must be positive");
  if (length - 2 > kernels.T) throw UsageError("trajectory longer than kernel horizon allows");
  const std::vector<double> no_field;
  // The two parity chains are independent; the probability factorizes.
  double p = 1.0;
  for (int tau = std::max(0, length - 2); tau <= length - 1; ++tau) {
    const Chain ch = make_chain(tau);
    if (ch.noise_times.empty()) {
      p *= chain_weight(ch);
      continue;
    }
    SliceOptions opts;
    opts.target_std_error = accuracy;
    opts.seed = integral_seed(seed, tau, -2, code);
    p *= chain_weight(ch) *
         slice_prob(chain_spec(kernels.C, kernels.R, ch, code, no_field), chain_orthant(ch, code), opts).value;
  }
  return p;
}

BiasPrediction predict_bias(int k, int T_star, double omega0, const CavityKernels& kernels, double accuracy,
                            std::uint64_t seed) {
  if (omega0 < 0.0) throw UsageError("omega0 must be non-negative");
  if (T_star < 0) throw UsageError("T* must be non-negative");
  if (kernels.T < T_star) throw UsageError("kernel horizon must be at least T*");
  BiasPrediction b;
  b.k = k;
  b.T_star = T_star;
  b.omega0 = omega0;
  b.omega.push_back(omega0);
  for (int t = 0; t < T_star; ++t) b.omega.push_back(kernels.R(t + 1, t) * b.omega.back());
  for (int t = 0; t <= T_star; ++t) {
    b.predicted_mean.push_back(b.omega[t] * std::pow(static_cast<double>(k), -(T_star - t + 1) / 2.0));
    b.predicted_err.push_back(0.0);
  }
  // Step T*+1: the effective process with the drift omega_{T*} added to the last noise.
  const int tau = T_star + 1;
  const Chain ch = make_chain(tau);
  std::vector<double> h(T_star + 1, 0.0);
  h[T_star] = b.omega[T_star];
  const auto assignments = chain_assignments(ch);
  Estimate est;
  for (auto code : assignments) {
    SliceOptions opts;
    opts.target_std_error = accuracy / std::sqrt(static_cast<double>(assignments.size()));
    opts.seed = integral_seed(seed, tau, -3, code);
    est.add(chain_weight(ch) * spin_at(code, tau),
            slice_prob(chain_spec(kernels.C, kernels.R, ch, code, h), chain_orthant(ch, code), opts));
  }
  b.predicted_mean.push_back(est.value);
  b.predicted_err.push_back(est.err());
  // Step T*+2: consensus in the biased regime; the unbiased process has mean 0.
  b.predicted_mean.push_back(omega0 > 0.0 ? 1.0 : 0.0);
  b.predicted_err.push_back(0.0);
  return b;
}

void write_kernels_csv(std::ostream& out, const CavityKernels& K) {
  out << "t,s,C,R,stderr\n";
  out << std::setprecision(10);
  for (int t = 0; t <= K.T; ++t)
    for (int s = 0; s <= t; ++s)
      out << t << ',' << s << ',' << K.C(t, s) << ',' << K.R(t, s) << ',' << (K.C_err(t, s) + K.R_err(t, s)) << '\n';
}

namespace {

nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(row);
  }
  return j;
}

Eigen::MatrixXd from_json(const nlohmann::json& j) {
  const int n = static_cast<int>(j.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < n; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

}  // namespace

void save_kernels_json(const std::string& path, const CavityKernels& K) {
  nlohmann::json j;
  j["T"] = K.T;
  j["accuracy"] = K.accuracy;
  j["seed"] = K.seed;
  j["C"] = to_json(K.C);
  j["R"] = to_json(K.R);
  j["C_err"] = to_json(K.C_err);
  j["R_err"] = to_json(K.R_err);
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write kernel cache " + path);
  out << j.dump(1) << '\n';
}

CavityKernels load_kernels_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read kernel cache " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  CavityKernels K;
  K.T = j.at("T").get<int>();
  K.accuracy = j.at("accuracy").get<double>();
  K.seed = j.at("seed").get<std::uint64_t>();
  K.C = from_json(j.at("C"));
  K.R = from_json(j.at("R"));
  K.C_err = from_json(j.at("C_err"));
  K.R_err = from_json(j.at("R_err"));
  return K;
}

CavityKernels cached_kernels(const std::string& path, int T_max, double accuracy, std::uint64_t seed) {
  if (!path.empty() && std::filesystem::exists(path)) {
    CavityKernels K = load_kernels_json(path);
    if (K.T == T_max && K.accuracy == accuracy && K.seed == seed) return K;
  }
  CavityKernels K = compute_kernels(T_max, accuracy, seed);
  if (!path.empty()) save_kernels_json(path, K);
  return K;
}

}  // namespace majority
