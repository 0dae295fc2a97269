#include "condexp/errors.hpp"
#include "condexp/forward.hpp"
#include "condexp/quadrature.hpp"

#include <doctest.h>

#include <cmath>
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

TEST_SUITE("forward") {

TEST_CASE("builtin maps at the origin") {
  const auto cubic = builtin_problem("cubic-1d");
  CHECK(evaluate(cubic.forward(), vec({0}))(0) == 0.125);
  const auto quad = builtin_problem("quadratic-1d");
  CHECK(evaluate(quad.forward(), vec({0}))(0) == 0.0);
  const auto two = builtin_problem("twopar-2d");
  CHECK(evaluate(two.forward(), vec({0, 0}))(0) == 0.0);
  REQUIRE(two.observed());
  CHECK((*two.observed())(0) == 0.0);
}

TEST_CASE("builtin maps agree with their closed forms") {
  const auto cubic = builtin_problem("cubic-1d");
  const auto quad = builtin_problem("quadratic-1d");
  const auto two = builtin_problem("twopar-2d");
  for (double q : {-2.3, -0.5, 0.7, 1.9}) {
    CHECK(evaluate(cubic.forward(), vec({q}))(0) == doctest::Approx(std::pow(q + 0.5, 3) + q / 2));
    CHECK(evaluate(quad.forward(), vec({q}))(0) == doctest::Approx(q * q + q / 2));
    const double q2 = 0.3 - q;
    const double expected = q * (q + 1.5) * (q - 1.5) + q2 * (q2 + 1.5) * (q2 - 1.5) - q * q2;
    CHECK(evaluate(two.forward(), vec({q, q2}))(0) == doctest::Approx(expected));
  }
}

TEST_CASE("measurement adds the error") {
  const auto cubic = builtin_problem("cubic-1d");
  CHECK(eval_measurement(cubic, vec({0}), vec({0}))(0) == 0.125);
  CHECK(eval_measurement(cubic, vec({0}), vec({1}))(0) == doctest::Approx(0.125 + std::sqrt(0.4)));
  const InverseProblem zero(GaussianSpec::standard(1), PolynomialMap(1, 1, {}), GaussianSpec::scalar(0, 1));
  CHECK(eval_measurement(zero, vec({1.7}), vec({0}))(0) == 0.0);
}

TEST_CASE("measurement with zero error germ equals the forward map on a grid") {
  const auto two = builtin_problem("twopar-2d");
  const auto rule = gauss_hermite(2, 9);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vector xi = rule.node(i);
    CHECK(eval_measurement(two, xi, vec({0}))(0) == eval_forward(std::get<PolynomialMap>(two.forward()), xi)(0));
  }
}

TEST_CASE("builtin dimensions and errors") {
  const auto cubic = builtin_problem("cubic-1d");
  const auto& err = std::get<GaussianSpec>(cubic.error());
  CHECK(err.covariance()(0, 0) == 0.4);
  const auto quad = builtin_problem("quadratic-1d");
  CHECK(std::get<GaussianSpec>(quad.error()).covariance()(0, 0) == 0.1);
  CHECK(builtin_problem("twopar-2d").parameter_dim() == 2);
  CHECK_THROWS_AS(builtin_problem("nope"), ParseError);
  CHECK(builtin_problem_names().size() == 3);
}

TEST_CASE("polynomial map agrees with a naive monomial sum") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> point(-3.0, 3.0);
  std::uniform_int_distribution<int> expo(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PolynomialMap::Term> terms;
    for (int t = 0; t < 12; ++t) {
      terms.push_back({static_cast<std::size_t>(t % 2), {expo(gen), expo(gen), expo(gen)}, coef(gen)});
    }
    const PolynomialMap map(3, 2, terms);
    const Vector q = vec({point(gen), point(gen), point(gen)});
    Vector naive = Vector::Zero(2);
    double scale = 0.0;
    for (const auto& t : terms) {
      double m = t.coefficient;
      for (int k = 0; k < 3; ++k) m *= std::pow(q(k), t.exponents[static_cast<std::size_t>(k)]);
      naive(static_cast<Eigen::Index>(t.output)) += m;
      scale += std::abs(m);
    }
    CHECK((map(q) - naive).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1.0));
  }
}

TEST_CASE("black-box operators") {
  const BlackBoxMap box{1, 1, [](const Vector& q) { return Vector::Constant(1, std::sin(q(0))); }};
  const InverseProblem p(GaussianSpec::standard(1), box, GaussianSpec::scalar(0, 0.1));
  CHECK(p.observation(vec({0.5}))(0) == doctest::Approx(std::sin(0.5)));
  CHECK_THROWS_AS(InverseProblem(GaussianSpec::standard(2), box, GaussianSpec::scalar(0, 0.1)), DimensionError);
}

TEST_CASE("pce prior is evaluated through its expansion") {
  Matrix coeffs(1, 2);
  coeffs << 1.0, 2.0;
  const PceExpansion pce(coeffs, {{0}, {1}}, 1);
  const InverseProblem p(pce, PolynomialMap(1, 1, {{0, {1}, 1.0}}), GaussianSpec::scalar(0, 0.1));
  CHECK(p.parameter(vec({0.5}))(0) == 2.0);
}

TEST_CASE("polynomial errors") {
  const PolynomialError cubic_err{{ScalarPolynomial({0.0, 1.0, 0.0, 0.1})}};
  const ErrorModel e = cubic_err;
  CHECK(is_invertible(e));
  CHECK(invert(e, vec({1.1}))(0) == doctest::Approx(1.0));
  CHECK(error_log_density(e, vec({0.0})) == doctest::Approx(std::log(standard_normal_pdf(0.0))));
  const ErrorModel sq = PolynomialError{{ScalarPolynomial({0.0, 0.0, 1.0})}};
  CHECK_FALSE(is_invertible(sq));
  CHECK_THROWS_AS(invert(sq, vec({1.0})), PreconditionError);
}

}
