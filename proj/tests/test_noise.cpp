#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "basis.hpp"
#include "noise.hpp"

using shecov::Basis;
using shecov::QSpec;

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

TEST_CASE("QSpec construction and materialization") {
  const QSpec power = QSpec::from_power(0.5, 2.0, 8);
  CHECK(power.count() == 8);
  for (int k = 1; k <= 8; ++k)
    CHECK(power.lambda(k) == 0.5 * std::pow(static_cast<double>(k), -2.0));
  CHECK(power.lambda(9) == 0.0);  // beyond truncation

  const QSpec list = QSpec::from_list({0.3, 0.0, 0.1});
  CHECK(list.count() == 3);
  CHECK(list.lambda(2) == 0.0);
  CHECK_FALSE(list.is_power());

  CHECK_THROWS_AS(QSpec::from_list({-0.1}), std::invalid_argument);
  CHECK_THROWS_AS(QSpec::from_power(0.0, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(QSpec::from_power(1.0, -1.0, 4), std::invalid_argument);
}

TEST_CASE("lambda_gamma: examples and summation oracle") {
  const Basis basis(1, 8);

  // all zeros
  CHECK(shecov::lambda_gamma(QSpec::from_list(std::vector<double>(8, 0.0)), basis, 0.1)
            .partial_sum == 0.0);

  // single mode, gamma = 0: sup-norm squared is 2/pi
  const QSpec single = QSpec::from_list({1.0, 0.0, 0.0});
  CHECK(shecov::lambda_gamma(single, basis, 0.0).partial_sum ==
        doctest::Approx(2.0 / kPi).epsilon(1e-15));

  // power family k^{-1}, K=8, gamma = 0: direct summation oracle
  const QSpec family = QSpec::from_power(1.0, 1.0, 8);
  double expected = 0.0;
  for (int k = 1; k <= 8; ++k) expected += std::pow(static_cast<double>(k), -2.0);
  expected *= 2.0 / kPi;
  CHECK(shecov::lambda_gamma(family, basis, 0.0).partial_sum ==
        doctest::Approx(expected).epsilon(1e-14));

  // tail bound for s > 1/2: c^2 K^{1-2s}/(2s-1) times the norm constant
  const auto lg = shecov::lambda_gamma(family, basis, 0.0);
  REQUIRE(lg.tail_bound.has_value());
  CHECK(*lg.tail_bound == doctest::Approx((2.0 / kPi) / 8.0).epsilon(1e-14));
  // the bound dominates the true tail sum_{k>8} k^{-2}
  double true_tail = 0.0;
  for (int k = 9; k <= 200000; ++k) true_tail += std::pow(static_cast<double>(k), -2.0);
  CHECK(*lg.tail_bound >= (2.0 / kPi) * true_tail);

  CHECK_THROWS_AS((void)shecov::lambda_gamma(single, basis, 0.25), std::invalid_argument);
  CHECK_THROWS_AS((void)shecov::lambda_gamma(single, basis, -0.01), std::invalid_argument);
}

TEST_CASE("lambda_gamma is additive in lambda^2") {
  const Basis basis(1, 6);
  const QSpec base = QSpec::from_list({0.4, 0.3, 0.2, 0.15, 0.1, 0.05});
  std::vector<double> doubled;
  for (double v : base.lambdas()) doubled.push_back(2.0 * v);
  const double l1 = shecov::lambda_gamma(base, basis, 0.1).partial_sum;
  const double l2 = shecov::lambda_gamma(QSpec::from_list(doubled), basis, 0.1).partial_sum;
  CHECK(l2 == 4.0 * l1);  // exact: scaling by 4 distributes over the sum
}

TEST_CASE("well-posedness report") {
  const Basis basis(1, 8);

  const auto family = shecov::check_wellposed(QSpec::from_power(1.0, 1.0, 8), basis);
  CHECK(family.admissible);
  REQUIRE(family.witness_gamma.has_value());
  CHECK(*family.witness_gamma == 0.0);
  CHECK(family.note.find("tail") != std::string::npos);

  const auto zeros =
      shecov::check_wellposed(QSpec::from_list(std::vector<double>(8, 0.0)), basis);
  CHECK(zeros.admissible);

  const auto list = shecov::check_wellposed(QSpec::from_list({5.0, 2.0, 7.0}), basis);
  CHECK(list.admissible);
  CHECK(list.note.find("finite truncation") != std::string::npos);
}
