#include "condexp/forward.hpp"

#include "condexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace condexp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(const char* what, std::size_t got, std::size_t expected) {
  if (got != expected) {
    throw DimensionError(std::string(what) + ": got dimension " + std::to_string(got) +
                         ", expected " + std::to_string(expected));
  }
}

}  // namespace

PolynomialMap::PolynomialMap(std::size_t input_dim, std::size_t output_dim, std::vector<Term> terms)
    : input_dim_(input_dim), output_dim_(output_dim), terms_(std::move(terms)) {
  if (input_dim_ == 0 || output_dim_ == 0) {
    throw PreconditionError("PolynomialMap: input and output dimensions must be positive");
  }
  for (const auto& t : terms_) {
    if (t.output >= output_dim_) {
      throw DimensionError("PolynomialMap: term output index " + std::to_string(t.output) +
                           " >= output dimension " + std::to_string(output_dim_));
    }
    check_dim("PolynomialMap term exponents", t.exponents.size(), input_dim_);
    for (int e : t.exponents) {
      if (e < 0) throw PreconditionError("PolynomialMap: negative exponent");
      max_exponent_ = std::max(max_exponent_, e);
    }
    if (!std::isfinite(t.coefficient)) throw PreconditionError("PolynomialMap: non-finite coefficient");
  }
}

Vector PolynomialMap::operator()(const Vector& q) const {
  check_dim("eval_forward", static_cast<std::size_t>(q.size()), input_dim_);
  // powers(d, e) = q_d^e
  Matrix powers(static_cast<Eigen::Index>(input_dim_), max_exponent_ + 1);
  for (Eigen::Index d = 0; d < q.size(); ++d) {
    powers(d, 0) = 1.0;
    for (int e = 1; e <= max_exponent_; ++e) powers(d, e) = powers(d, e - 1) * q(d);
  }
  Vector out = Vector::Zero(static_cast<Eigen::Index>(output_dim_));
  for (const auto& t : terms_) {
    double m = t.coefficient;
    for (std::size_t d = 0; d < input_dim_; ++d) m *= powers(static_cast<Eigen::Index>(d), t.exponents[d]);
    out(static_cast<Eigen::Index>(t.output)) += m;
  }
  return out;
}

Vector eval_forward(const PolynomialMap& map, const Vector& q) { return map(q); }

std::size_t input_dim(const ObservationOperator& op) {
  return std::visit(Overloaded{[](const PolynomialMap& m) { return m.input_dim(); },
                               [](const BlackBoxMap& m) { return m.input_dim; }},
                    op);
}

std::size_t output_dim(const ObservationOperator& op) {
  return std::visit(Overloaded{[](const PolynomialMap& m) { return m.output_dim(); },
                               [](const BlackBoxMap& m) { return m.output_dim; }},
                    op);
}

Vector evaluate(const ObservationOperator& op, const Vector& q) {
  return std::visit(Overloaded{[&](const PolynomialMap& m) { return m(q); },
                               [&](const BlackBoxMap& m) {
                                 check_dim("black-box forward input",
                                           static_cast<std::size_t>(q.size()), m.input_dim);
                                 Vector y = m.evaluate(q);
                                 check_dim("black-box forward output",
                                           static_cast<std::size_t>(y.size()), m.output_dim);
                                 return y;
                               }},
                    op);
}

std::size_t germ_dim(const Prior& prior) {
  return std::visit(Overloaded{[](const GaussianSpec& g) { return g.dim(); },
                               [](const PceExpansion& p) { return p.germ_dim(); }},
                    prior);
}

std::size_t parameter_dim(const Prior& prior) {
  return std::visit(Overloaded{[](const GaussianSpec& g) { return g.dim(); },
                               [](const PceExpansion& p) { return p.output_dim(); }},
                    prior);
}

Vector evaluate(const Prior& prior, const Vector& xi) {
  return std::visit(Overloaded{[&](const GaussianSpec& g) { return g.transform(xi); },
                               [&](const PceExpansion& p) { return evaluate_pce(p, xi); }},
                    prior);
}

std::size_t error_dim(const ErrorModel& error) {
  return std::visit(Overloaded{[](const GaussianSpec& g) { return g.dim(); },
                               [](const PolynomialError& p) { return p.components.size(); }},
                    error);
}

Vector evaluate(const ErrorModel& error, const Vector& theta) {
  return std::visit(
      Overloaded{[&](const GaussianSpec& g) { return g.transform(theta); },
                 [&](const PolynomialError& p) {
                   check_dim("error germ", static_cast<std::size_t>(theta.size()),
                             p.components.size());
                   Vector e(theta.size());
                   for (Eigen::Index i = 0; i < theta.size(); ++i) e(i) = p.components[i](theta(i));
                   return e;
                 }},
      error);
}

double error_log_density(const ErrorModel& error, const Vector& residual) {
  return std::visit(
      Overloaded{[&](const GaussianSpec& g) { return gaussian_log_pdf(g, residual); },
                 [&](const PolynomialError& p) {
                   check_dim("error residual", static_cast<std::size_t>(residual.size()),
                             p.components.size());
                   double total = 0.0;
                   for (Eigen::Index i = 0; i < residual.size(); ++i) {
                     total += log_density_of_polynomial_rv(p.components[i], residual(i));
                     if (total == -std::numeric_limits<double>::infinity()) break;
                   }
                   return total;
                 }},
      error);
}

bool is_invertible(const ErrorModel& error) {
  return std::visit(Overloaded{[](const GaussianSpec&) { return true; },
                               [](const PolynomialError& p) {
                                 return std::all_of(p.components.begin(), p.components.end(),
                                                    [](const ScalarPolynomial& c) {
                                                      return c.is_monotone();
                                                    });
                               }},
                    error);
}

Vector invert(const ErrorModel& error, const Vector& residual) {
  return std::visit(
      Overloaded{[&](const GaussianSpec& g) { return g.whiten(residual); },
                 [&](const PolynomialError& p) {
                   check_dim("error residual", static_cast<std::size_t>(residual.size()),
                             p.components.size());
                   Vector theta(residual.size());
                   for (Eigen::Index i = 0; i < residual.size(); ++i) {
                     theta(i) = p.components[i].invert(residual(i));
                   }
                   return theta;
                 }},
      error);
}

InverseProblem::InverseProblem(Prior prior, ObservationOperator forward, ErrorModel error,
                               std::optional<Vector> observed, std::string name)
    : prior_(std::move(prior)),
      forward_(std::move(forward)),
      error_(std::move(error)),
      observed_(std::move(observed)),
      name_(std::move(name)) {
  check_dim("forward input vs prior output", input_dim(forward_), condexp::parameter_dim(prior_));
  check_dim("error vs forward output", condexp::error_dim(error_), output_dim(forward_));
  if (const auto* p = std::get_if<PolynomialError>(&error_)) {
    for (const auto& c : p->components) {
      if (c.degree() < 1) throw PreconditionError("PolynomialError: component of degree < 1");
    }
  }
  if (observed_) check_dim("observed value", static_cast<std::size_t>(observed_->size()), measurement_dim());
}

Vector eval_measurement(const InverseProblem& problem, const Vector& xi, const Vector& theta) {
  check_dim("eval_measurement xi", static_cast<std::size_t>(xi.size()), problem.germ_dim());
  check_dim("eval_measurement theta", static_cast<std::size_t>(theta.size()),
            error_dim(problem.error()));
  return problem.observation(xi) + evaluate(problem.error(), theta);
}

InverseProblem builtin_problem(const std::string& name) {
  using Term = PolynomialMap::Term;
  if (name == "cubic-1d") {
    // (q + 1/2)^3 + q/2 = q^3 + 1.5 q^2 + 1.25 q + 0.125
    PolynomialMap map(1, 1,
                      {Term{0, {3}, 1.0}, Term{0, {2}, 1.5}, Term{0, {1}, 1.25}, Term{0, {0}, 0.125}});
    return InverseProblem(GaussianSpec::standard(1), std::move(map), GaussianSpec::scalar(0.0, 0.4),
                          std::nullopt, name);
  }
  if (name == "quadratic-1d") {
    PolynomialMap map(1, 1, {Term{0, {2}, 1.0}, Term{0, {1}, 0.5}});
    return InverseProblem(GaussianSpec::standard(1), std::move(map), GaussianSpec::scalar(0.0, 0.1),
                          std::nullopt, name);
  }
  if (name == "twopar-2d") {
    // q1 (q1 + 3/2)(q1 - 3/2) + q2 (q2 + 3/2)(q2 - 3/2) - q1 q2
    PolynomialMap map(2, 1,
                      {Term{0, {3, 0}, 1.0}, Term{0, {1, 0}, -2.25}, Term{0, {0, 3}, 1.0},
                       Term{0, {0, 1}, -2.25}, Term{0, {1, 1}, -1.0}});
    return InverseProblem(GaussianSpec::standard(2), std::move(map), GaussianSpec::scalar(0.0, 0.4),
                          Vector::Zero(1), name);
  }
  throw ParseError("unknown builtin problem '" + name + "' (expected one of cubic-1d, quadratic-1d, twopar-2d)");
}

std::vector<std::string> builtin_problem_names() { return {"cubic-1d", "quadratic-1d", "twopar-2d"}; }

}  // namespace condexp
