#pragma once

#include "condexp/numeric.hpp"
#include "condexp/prob.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace condexp {

/// Multivariate polynomial map R^input_dim -> R^output_dim given as a list
/// of monomial terms.
class PolynomialMap {
 public:
  struct Term {
    std::size_t output;
    std::vector<int> exponents;
    double coefficient;
  };

  PolynomialMap(std::size_t input_dim, std::size_t output_dim, std::vector<Term> terms);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const std::vector<Term>& terms() const { return terms_; }

  Vector operator()(const Vector& q) const;

 private:
  std::size_t input_dim_;
  std::size_t output_dim_;
  std::vector<Term> terms_;
  int max_exponent_ = 0;
};

Vector eval_forward(const PolynomialMap& map, const Vector& q);

/// Arbitrary observation operator supplied by the caller (e.g. a PDE solve).
/// Must be a pure function of q.
struct BlackBoxMap {
  std::size_t input_dim;
  std::size_t output_dim;
  std::function<Vector(const Vector&)> evaluate;
};

using ObservationOperator = std::variant<PolynomialMap, BlackBoxMap>;

std::size_t input_dim(const ObservationOperator& op);
std::size_t output_dim(const ObservationOperator& op);
Vector evaluate(const ObservationOperator& op, const Vector& q);

/// Prior random variable Q as a map from the germ xi ~ N(0, I) to parameter
/// space. A Gaussian prior is Q(xi) = mean + L xi.
using Prior = std::variant<GaussianSpec, PceExpansion>;

std::size_t germ_dim(const Prior& prior);
std::size_t parameter_dim(const Prior& prior);
Vector evaluate(const Prior& prior, const Vector& xi);

/// Per-component polynomial chaos error E_i(theta_i) = poly_i(theta_i) with
/// independent standard-normal theta_i.
struct PolynomialError {
  std::vector<ScalarPolynomial> components;
};

/// Additive measurement error E(theta). Gaussian errors are E = mean + L theta.
using ErrorModel = std::variant<GaussianSpec, PolynomialError>;

std::size_t error_dim(const ErrorModel& error);
Vector evaluate(const ErrorModel& error, const Vector& theta);

/// log f_E(residual); -inf where the density vanishes.
double error_log_density(const ErrorModel& error, const Vector& residual);

/// True when E is a bijection, so E^{-1} exists.
bool is_invertible(const ErrorModel& error);

/// theta* = E^{-1}(residual). Throws PreconditionError for non-invertible errors.
Vector invert(const ErrorModel& error, const Vector& residual);

/// Bayesian inverse problem Z(xi, theta) = Y_Q(Q(xi)) + E(theta).
class InverseProblem {
 public:
  InverseProblem(Prior prior, ObservationOperator forward, ErrorModel error,
                 std::optional<Vector> observed = std::nullopt, std::string name = {});

  const Prior& prior() const { return prior_; }
  const ObservationOperator& forward() const { return forward_; }
  const ErrorModel& error() const { return error_; }
  const std::optional<Vector>& observed() const { return observed_; }
  const std::string& name() const { return name_; }

  std::size_t germ_dim() const { return condexp::germ_dim(prior_); }
  std::size_t parameter_dim() const { return condexp::parameter_dim(prior_); }
  std::size_t measurement_dim() const { return condexp::output_dim(forward_); }

  Vector parameter(const Vector& xi) const { return evaluate(prior_, xi); }
  /// Y(xi) = Y_Q(Q(xi)).
  Vector observation(const Vector& xi) const { return evaluate(forward_, parameter(xi)); }

 private:
  Prior prior_;
  ObservationOperator forward_;
  ErrorModel error_;
  std::optional<Vector> observed_;
  std::string name_;
};

Vector eval_measurement(const InverseProblem& problem, const Vector& xi, const Vector& theta);

/// Builtin example problems: "cubic-1d", "quadratic-1d", "twopar-2d".
InverseProblem builtin_problem(const std::string& name);
std::vector<std::string> builtin_problem_names();

}  // namespace condexp
