#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "majority/cavity.hpp"

using namespace majority;

namespace {

const CavityKernels& kernels4() {
  static const CavityKernels K = compute_kernels(4, 1e-5, 7);
  return K;
}

}  // namespace

TEST_CASE("closed-form kernel entries") {
  const auto& K = kernels4();
  const double r10 = std::sqrt(2.0 / std::numbers::pi);
  CHECK(K.R(1, 0) == doctest::Approx(r10).epsilon(1e-4));
  CHECK(K.R(2, 1) == doctest::Approx(2.0 * normal_pdf(r10)).epsilon(1e-4));
  CHECK(K.C(2, 0) == doctest::Approx(2.0 * normal_cdf(r10) - 1.0).epsilon(1e-4));
}

TEST_CASE("published table values") {
  const auto& K = kernels4();
  CHECK(std::abs(K.C(2, 0) - 0.5751) < 0.002);
  CHECK(std::abs(K.C(3, 1) - 0.7600) < 0.002);
  CHECK(std::abs(K.R(1, 0) - 0.7979) < 0.002);
  CHECK(std::abs(K.R(2, 1) - 0.5804) < 0.002);
  CHECK(std::abs(K.R(3, 0) - 0.4164) < 0.002);
  CHECK(std::abs(K.R(3, 2) - 0.4607) < 0.002);
  CHECK(std::abs(K.R(4, 1) - 0.2920) < 0.002);
  CHECK(std::abs(K.R(4, 3) - 0.3950) < 0.002);
}

TEST_CASE("parity structure and causality") {
  const auto& K = kernels4();
  for (int t = 0; t <= 4; ++t) {
    CHECK(K.C(t, t) == doctest::Approx(1.0));
    for (int s = 0; s <= 4; ++s) {
      CHECK(K.C(t, s) == doctest::Approx(K.C(s, t)));
      if ((t + s) % 2 == 1) CHECK(K.C(t, s) == 0.0);
      if ((t + s) % 2 == 0 || s >= t) CHECK(K.R(t, s) == 0.0);
    }
  }
}

TEST_CASE("trajectory probabilities") {
  const auto& K = kernels4();
  CHECK(trajectory_prob(K, 0b1, 1) == doctest::Approx(0.5));
  for (std::uint32_t c = 0; c < 4; ++c) CHECK(trajectory_prob(K, c, 2) == doctest::Approx(0.25));
  CHECK(trajectory_prob(K, 0b111, 3) == doctest::Approx(0.25 * normal_cdf(K.R(1, 0))).epsilon(1e-6));
  CHECK(trajectory_prob(K, 0b111, 3) == doctest::Approx(0.19689).epsilon(1e-4));
  for (int len = 3; len <= 5; ++len) {
    double total = 0.0;
    for (std::uint32_t c = 0; c < (1U << len); ++c) {
      const double p = trajectory_prob(K, c, len);
      CHECK(p >= 0.0);
      const std::uint32_t flipped = ~c & ((1U << len) - 1);
      CHECK(p == doctest::Approx(trajectory_prob(K, flipped, len)).epsilon(1e-4));
      total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  }
  CHECK_THROWS_AS(trajectory_prob(K, 0, 7), UsageError);
}

TEST_CASE("effective process sampling reproduces the kernels") {
  const auto& K = kernels4();
  const EffectiveProcessParams params = effective_params(K);
  const long n = 200000;
  const auto codes = sample_effective_many(params, 4, n, RandomSeed{3, 0});
  for (int t = 1; t <= 4; ++t) {
    double m = 0.0;
    for (auto c : codes) m += spin_at(c, t);
    CHECK(std::abs(m / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
  for (auto [t, s] : {std::pair{2, 0}, {3, 1}, {4, 2}}) {
    double cov = 0.0;
    for (auto c : codes) cov += spin_at(c, t) * spin_at(c, s);
    cov /= n;
    const double se = std::sqrt((1.0 - K.C(t, s) * K.C(t, s)) / n);
    CHECK(std::abs(cov - K.C(t, s)) < 4.0 * se);
  }
}

TEST_CASE("no response and white noise give independent fair spins") {
  EffectiveProcessParams p;
  p.C = Eigen::MatrixXd::Identity(4, 4);
  p.R = Eigen::MatrixXd::Zero(4, 4);
  const long n = 100000;
  const auto codes = sample_effective_many(p, 3, n, RandomSeed{8, 8});
  double c12 = 0.0, m3 = 0.0;
  for (auto c : codes) {
    c12 += spin_at(c, 1) * spin_at(c, 2);
    m3 += spin_at(c, 3);
  }
  CHECK(std::abs(c12 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(m3 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("biased prediction") {
  const auto& K = kernels4();
  const BiasPrediction b1 = predict_bias(20, 1, 0.5, K, 1e-5, 1);
  REQUIRE(b1.omega.size() == 2);
  CHECK(b1.omega[1] == doctest::Approx(0.7979 * 0.5).epsilon(1e-3));
  CHECK(b1.predicted_mean[0] == doctest::Approx(0.5 / 20.0));
  REQUIRE(b1.predicted_mean.size() == 4);
  CHECK(b1.predicted_mean[3] == 1.0);

  const BiasPrediction b3 = predict_bias(20, 3, 2.5, K, 1e-5, 1);
  CHECK(b3.omega[1] == doctest::Approx(1.9947).epsilon(1e-3));
  CHECK(b3.omega[2] == doctest::Approx(1.1578).epsilon(1e-3));
  CHECK(b3.omega[3] == doctest::Approx(0.5334).epsilon(1e-3));

  const BiasPrediction zero = predict_bias(20, 1, 0.0, K, 1e-5, 1);
  for (std::size_t t = 0; t < zero.predicted_mean.size(); ++t)
    CHECK(std::abs(zero.predicted_mean[t]) <= 4.0 * zero.predicted_err[t] + 1e-12);
  CHECK_THROWS_AS(predict_bias(20, 1, -1.0, K, 1e-5, 1), UsageError);
}

TEST_CASE("kernel serialization") {
  const auto& K = kernels4();
  const std::string path = "test_cavity_kernels.json";
  save_kernels_json(path, K);
  const CavityKernels L = load_kernels_json(path);
  CHECK(L.T == K.T);
  CHECK(L.C.isApprox(K.C, 0.0));
  CHECK(L.R.isApprox(K.R, 0.0));
  std::remove(path.c_str());
  std::ostringstream out;
  write_kernels_csv(out, K);
  CHECK(out.str().rfind("t,s,C,R,stderr\n", 0) == 0);
}

TEST_CASE("kernel computation is reproducible") {
  const CavityKernels a = compute_kernels(3, 1e-4, 11), b = compute_kernels(3, 1e-4, 11, 2);
  CHECK(a.C == b.C);
  CHECK(a.R == b.R);
}
