#include "condexp/numeric.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace condexp;

TEST_SUITE("numeric") {

TEST_CASE("pairwise sum matches exact integer sums") {
  std::vector<double> v(10000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
  CHECK(pairwise_sum(v) == 50005000.0);
  CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}

TEST_CASE("log-sum-exp is stable for large magnitudes") {
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> tiny{-2000.0, -2000.0 + std::log(3.0)};
  CHECK(log_sum_exp(tiny) == doctest::Approx(-2000.0 + std::log(4.0)));
  const double ninf = -std::numeric_limits<double>::infinity();
  const std::vector<double> none{ninf, ninf};
  CHECK(log_sum_exp(none) == ninf);
}

TEST_CASE("pseudo-inverse of a rank-one matrix") {
  Matrix a(2, 2);
  a << 1, 1, 1, 1;
  const Matrix p = pseudo_inverse(a);
  CHECK((a * p * a - a).norm() < 1e-12);
  CHECK((p - Matrix::Constant(2, 2, 0.25)).norm() < 1e-12);
}

TEST_CASE("symmetric square roots") {
  Matrix a(2, 2);
  a << 4, 1, 1, 3;
  const Matrix s = symmetric_sqrt(a);
  CHECK((s * s - a).norm() < 1e-12);
  const Matrix si = symmetric_inverse_sqrt(a);
  CHECK((si * a * si - Matrix::Identity(2, 2)).norm() < 1e-12);
  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 4.0;
  const Matrix sis = symmetric_inverse_sqrt(singular);
  CHECK(sis(0, 0) == doctest::Approx(0.5));
  CHECK(sis(1, 1) == 0.0);
}

TEST_CASE("symmetric eigen is ascending") {
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  const auto e = symmetric_eigen(a);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.values(1) == doctest::Approx(3.0));
}

TEST_CASE("linspace is inclusive") {
  const auto v = linspace(-6.0, 6.0, 121);
  REQUIRE(v.size() == 121);
  CHECK(v.front() == -6.0);
  CHECK(v.back() == 6.0);
  CHECK(v[60] == doctest::Approx(0.0));
  CHECK(linspace(1.0, 2.0, 1) == std::vector<double>{1.0});
}

}
