#include <doctest.h>

#include <cmath>
#include <numbers>

#include "majority/gaussian.hpp"

using namespace majority;

namespace {

GaussianSpec make(std::initializer_list<double> mean, Eigen::MatrixXd cov) {
  GaussianSpec g;
  g.mean = Eigen::VectorXd(static_cast<Eigen::Index>(mean.size()));
  int i = 0;
  for (double m : mean) g.mean(i++) = m;
  g.cov = std::move(cov);
  return g;
}

Eigen::MatrixXd corr2(double r) {
  Eigen::MatrixXd c(2, 2);
  c << 1, r, r, 1;
  return c;
}

}  // namespace

TEST_CASE("normal helpers") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.77, 0.999999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
}

TEST_CASE("one-dimensional slices") {
  const GaussianSpec g = make({0.0}, Eigen::MatrixXd::Identity(1, 1));
  CHECK(slice_prob(g, SlicePartition{{Side::Plus}}).value == doctest::Approx(0.5));
  CHECK(slice_prob(g, SlicePartition{{Side::Pinned}}).value == doctest::Approx(0.3989422804));
  const GaussianSpec h = make({0.7}, 4.0 * Eigen::MatrixXd::Identity(1, 1));
  const double plus = slice_prob(h, SlicePartition{{Side::Plus}}).value;
  const double minus = slice_prob(h, SlicePartition{{Side::Minus}}).value;
  CHECK(plus + minus == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(plus == doctest::Approx(normal_cdf(0.35)));
}

TEST_CASE("bivariate orthant formula") {
  for (double r : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
    SliceOptions o;
    o.target_std_error = 1e-6;
    const SliceResult res = slice_prob(make({0.0, 0.0}, corr2(r)), SlicePartition::orthant({1, 1}), o);
    CHECK(res.value == doctest::Approx(0.25 + std::asin(r) / (2.0 * std::numbers::pi)).epsilon(1e-5));
  }
}

TEST_CASE("trivariate orthant formula") {
  Eigen::MatrixXd c(3, 3);
  c << 1, 0.3, -0.2, 0.3, 1, 0.5, -0.2, 0.5, 1;
  SliceOptions o;
  o.target_std_error = 1e-6;
  const double expect = 0.125 + (std::asin(0.3) + std::asin(-0.2) + std::asin(0.5)) / (4.0 * std::numbers::pi);
  CHECK(slice_prob(make({0, 0, 0}, c), SlicePartition::orthant({1, 1, 1}), o).value ==
        doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("quasi and plain Monte Carlo agree") {
  Eigen::MatrixXd c(3, 3);
  c << 2, 0.4, 0.1, 0.4, 1, -0.3, 0.1, -0.3, 1.5;
  const GaussianSpec g = make({0.3, -0.2, 0.5}, c);
  SliceOptions q, mc;
  q.target_std_error = 1e-5;
  mc.target_std_error = 5e-4;
  mc.method = SliceMethod::PlainMonteCarlo;
  mc.seed = 99;
  const auto part = SlicePartition::orthant({1, -1, 1});
  const SliceResult a = slice_prob(g, part, q), b = slice_prob(g, part, mc);
  CHECK(std::abs(a.value - b.value) < 4.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("inclusion-exclusion over sign patterns") {
  Eigen::MatrixXd c(3, 3);
  c << 1, 0.6, 0.2, 0.6, 1.3, 0.1, 0.2, 0.1, 0.8;
  const GaussianSpec g = make({0.2, -0.4, 0.1}, c);
  double total = 0.0, var = 0.0;
  for (int code = 0; code < 8; ++code) {
    std::vector<int> s{code & 1 ? 1 : -1, code & 2 ? 1 : -1, code & 4 ? 1 : -1};
    const SliceResult r = slice_prob(g, SlicePartition::orthant(s));
    total += r.value;
    var += r.std_error * r.std_error;
  }
  CHECK(std::abs(total - 1.0) <= 3.0 * std::sqrt(var) + 1e-12);
}

TEST_CASE("free coordinates marginalize") {
  const GaussianSpec g = make({0.3, -0.1}, corr2(0.7));
  const double a = slice_prob(g, SlicePartition{{Side::Plus, Side::Free}}).value;
  CHECK(a == doctest::Approx(normal_cdf(0.3)));
}

TEST_CASE("pinned coordinate uses the conditional law") {
  const double r = 0.6, m0 = 0.4, m1 = -0.2;
  const GaussianSpec g = make({m0, m1}, corr2(r));
  SliceOptions o;
  o.target_std_error = 1e-8;
  const double v = slice_prob(g, SlicePartition{{Side::Pinned, Side::Plus}}, o).value;
  const double cond_mean = m1 - r * m0, cond_sd = std::sqrt(1 - r * r);
  CHECK(v == doctest::Approx(normal_pdf(m0) * normal_cdf(cond_mean / cond_sd)).epsilon(1e-8));
}

TEST_CASE("conditional_reduce examples") {
  const GaussianSpec id = make({1.0, 2.0, 3.0}, Eigen::MatrixXd::Identity(3, 3));
  const GaussianSpec a = conditional_reduce(id, 1);
  CHECK(a.mean(0) == doctest::Approx(1.0));
  CHECK(a.mean(1) == doctest::Approx(3.0));
  CHECK(a.cov.isApprox(Eigen::MatrixXd::Identity(2, 2)));

  const double r = 0.3;
  const GaussianSpec b = conditional_reduce(make({0.5, 0.1}, corr2(r)), 0);
  CHECK(b.cov(0, 0) == doctest::Approx(1 - r * r));
  CHECK(b.mean(0) == doctest::Approx(0.1 - r * 0.5));

  const GaussianSpec s = select(make({1, 2, 3}, Eigen::MatrixXd::Identity(3, 3)), {2, 0});
  CHECK(s.mean(0) == doctest::Approx(3.0));
  CHECK(s.mean(1) == doctest::Approx(1.0));
}

TEST_CASE("indefinite covariance is rejected") {
  Eigen::MatrixXd c(2, 2);
  c << 1, 2, 2, 1;
  CHECK_THROWS_AS(slice_prob(make({0, 0}, c), SlicePartition::orthant({1, 1})), NotPositiveDefinite);
}

TEST_CASE("results are reproducible under a fixed seed") {
  Eigen::MatrixXd c(3, 3);
  c << 1, 0.5, 0.5, 0.5, 1, 0.5, 0.5, 0.5, 1;
  SliceOptions o;
  o.seed = 5;
  const auto part = SlicePartition::orthant({1, 1, -1});
  CHECK(slice_prob(make({0, 0, 0}, c), part, o).value == slice_prob(make({0, 0, 0}, c), part, o).value);
}
