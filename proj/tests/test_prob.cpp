#include "condexp/errors.hpp"
#include "condexp/prob.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace condexp;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}
}  // namespace

TEST_SUITE("prob") {

TEST_CASE("gaussian pdf values") {
  CHECK(gaussian_pdf(GaussianSpec::scalar(0, 1), vec({0})) == doctest::Approx(0.3989422804014327));
  CHECK(gaussian_pdf(GaussianSpec::scalar(0, 0.4), vec({0})) == doctest::Approx(0.6307831305050401));
  CHECK(gaussian_pdf(GaussianSpec::standard(2), vec({0, 0})) ==
        doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
}

TEST_CASE("gaussian log pdf far in the tail") {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(gaussian_log_pdf(GaussianSpec::scalar(0, 1), vec({0})) == doctest::Approx(-half_log_2pi));
  CHECK(gaussian_log_pdf(GaussianSpec::scalar(0, 1), vec({40})) == doctest::Approx(-800.0 - half_log_2pi));
  CHECK(gaussian_log_pdf(GaussianSpec::scalar(0, 0.1), vec({1})) ==
        doctest::Approx(-5.0 - 0.5 * std::log(2.0 * std::numbers::pi * 0.1)));
}

TEST_CASE("gaussian spec validation") {
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(GaussianSpec(Vector::Zero(2), asym), InvalidSpecError);
  Matrix singular = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(GaussianSpec(Vector::Zero(2), singular), InvalidSpecError);
  CHECK_THROWS_AS(GaussianSpec(Vector::Zero(3), Matrix::Identity(2, 2)), DimensionError);
  CHECK_THROWS_AS(gaussian_pdf(GaussianSpec::standard(2), vec({0})), DimensionError);
}

TEST_CASE("gaussian transform and whiten are inverse") {
  Matrix c(2, 2);
  c << 2, 0.3, 0.3, 0.5;
  const GaussianSpec g(vec({1, -1}), c);
  const Vector x = vec({0.7, -2.2});
  CHECK((g.transform(g.whiten(x)) - x).norm() < 1e-14);
  const Matrix& l = g.cholesky_factor();
  CHECK((l * l.transpose() - c).norm() < 1e-14);
}

TEST_CASE("hermite polynomials") {
  CHECK(hermite_he(0, 1.7) == 1.0);
  CHECK(hermite_he(1, 1.7) == 1.7);
  CHECK(hermite_he(2, 2.0) == doctest::Approx(3.0));
  CHECK(hermite_he(3, 2.0) == doctest::Approx(2.0));
  CHECK(hermite_he(4, 1.0) == doctest::Approx(-2.0));
}

TEST_CASE("pce evaluation") {
  const PceExpansion constant(Matrix::Constant(1, 1, 2.5), {{0}}, 1);
  CHECK(evaluate_pce(constant, vec({-3.0}))(0) == 2.5);
  const PceExpansion identity(Matrix::Constant(1, 1, 1.0), {{1}}, 1);
  CHECK(evaluate_pce(identity, vec({2.5}))(0) == 2.5);
  const PceExpansion second(Matrix::Constant(1, 1, 1.0), {{2}}, 1);
  CHECK(evaluate_pce(second, vec({2.0}))(0) == doctest::Approx(3.0));
  CHECK(second.covariance()(0, 0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(PceExpansion(Matrix::Ones(1, 2), {{1}, {1}}, 1), PreconditionError);
  CHECK_THROWS_AS(evaluate_pce(identity, vec({1.0, 2.0})), DimensionError);
}

TEST_CASE("pce moments in two germs") {
  Matrix coeffs(1, 3);
  coeffs << 1.0, 2.0, 0.5;
  const PceExpansion pce(coeffs, {{0, 0}, {1, 0}, {1, 1}}, 2);
  CHECK(pce.mean()(0) == 1.0);
  CHECK(pce.covariance()(0, 0) == doctest::Approx(4.0 + 0.25));
}

TEST_CASE("scalar polynomial roots and inversion") {
  const ScalarPolynomial cubic({0.125, 1.25, 1.5, 1.0});  // (q + 1/2)^3 + q/2
  CHECK(cubic(0.0) == 0.125);
  CHECK(cubic.is_monotone());
  CHECK(cubic.invert(0.125) == doctest::Approx(0.0));
  const auto roots = cubic.real_roots(0.125);
  REQUIRE(roots.size() == 1);
  CHECK(std::abs(roots[0]) < 1e-12);
  const ScalarPolynomial quad({0.0, 0.5, 1.0});
  CHECK_FALSE(quad.is_monotone());
  const auto two = quad.real_roots(2.0);
  REQUIRE(two.size() == 2);
  CHECK(quad(two[0]) == doctest::Approx(2.0));
  CHECK(quad(two[1]) == doctest::Approx(2.0));
  CHECK(quad.real_roots(-1.0).empty());
  CHECK_THROWS_AS(quad.invert(1.0), PreconditionError);
}

TEST_CASE("hermite to monomial conversion") {
  const auto p = ScalarPolynomial::from_hermite({1.0, 0.0, 1.0});  // 1 + (x^2 - 1)
  REQUIRE(p.degree() == 2);
  CHECK(p.coefficients()[0] == doctest::Approx(0.0));
  CHECK(p.coefficients()[2] == doctest::Approx(1.0));
}

TEST_CASE("density of transformed variables") {
  const double sigma = std::sqrt(0.4);
  CHECK(density_of_polynomial_rv(ScalarPolynomial({0.0, sigma}), 0.0) == doctest::Approx(0.6307831305050401));
  CHECK(density_of_polynomial_rv(ScalarPolynomial({0.0, 1.0}), 1.3) == doctest::Approx(standard_normal_pdf(1.3)));
  CHECK(density_of_polynomial_rv(ScalarPolynomial({0.0, 0.0, 1.0}), -1.0) == 0.0);
  CHECK(std::isinf(log_density_of_polynomial_rv(ScalarPolynomial({0.0, 0.0, 1.0}), -1.0)));
  CHECK_THROWS_AS(density_of_polynomial_rv(ScalarPolynomial({0.0, 0.0, 1.0}), 0.0), DegenerateDensityError);
}

TEST_CASE("density of a square matches chi-square with one degree of freedom") {
  const ScalarPolynomial square({0.0, 0.0, 1.0});
  for (double q : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double chi2 = std::exp(-q / 2.0) / std::sqrt(2.0 * std::numbers::pi * q);
    CHECK(density_of_polynomial_rv(square, q) == doctest::Approx(chi2).epsilon(1e-12));
    CHECK(log_density_of_polynomial_rv(square, q) == doctest::Approx(std::log(chi2)).epsilon(1e-12));
  }
}

TEST_CASE("density of a monotone cubic integrates to one") {
  const ScalarPolynomial cubic({0.125, 1.25, 1.5, 1.0});
  // Germ range +-8 maps into roughly [-420, 620].
  double total = 0.0;
  const double h = 0.005;
  for (int i = 0; i <= 280000; ++i) total += density_of_polynomial_rv(cubic, -700.0 + i * h) * h;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

}
