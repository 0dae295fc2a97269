#include "condexp/prob.hpp"

#include "condexp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

namespace condexp {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

}  // namespace

GaussianSpec::GaussianSpec(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const auto d = mean_.size();
  if (d == 0) throw InvalidSpecError("GaussianSpec: empty mean vector");
  if (covariance_.rows() != d || covariance_.cols() != d) {
    throw DimensionError("GaussianSpec: mean has dimension " + std::to_string(d) +
                         " but covariance is " + std::to_string(covariance_.rows()) + "x" +
                         std::to_string(covariance_.cols()));
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) {
    throw InvalidSpecError("GaussianSpec: non-finite entries");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      if (covariance_(i, j) != covariance_(j, i)) {
        throw InvalidSpecError("GaussianSpec: covariance is not symmetric");
      }
    }
  }
  const Vector lambda = Eigen::SelfAdjointEigenSolver<Matrix>(covariance_, Eigen::EigenvaluesOnly)
                            .eigenvalues();
  if (!(lambda(0) > 1e-14 * lambda(d - 1)) || !(lambda(0) > 0.0)) {
    throw InvalidSpecError("GaussianSpec: covariance is not positive definite");
  }
  Eigen::LLT<Matrix> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw InvalidSpecError("GaussianSpec: Cholesky factorization failed");
  }
  auto factor = std::make_shared<Matrix>(llt.matrixL());
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) log_det_half += std::log((*factor)(i, i));
  log_normalizer_ = -log_det_half - static_cast<double>(d) * kHalfLog2Pi;
  factor_ = std::move(factor);
}

GaussianSpec GaussianSpec::scalar(double mean, double variance) {
  return GaussianSpec(Vector::Constant(1, mean), Matrix::Constant(1, 1, variance));
}

GaussianSpec GaussianSpec::standard(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return GaussianSpec(Vector::Zero(d), Matrix::Identity(d, d));
}

Vector GaussianSpec::transform(const Vector& germ) const {
  if (germ.size() != mean_.size()) throw DimensionError("GaussianSpec::transform: germ dimension");
  return mean_ + factor_->triangularView<Eigen::Lower>() * germ;
}

Vector GaussianSpec::whiten(const Vector& x) const {
  if (x.size() != mean_.size()) {
    throw DimensionError("GaussianSpec: point has dimension " + std::to_string(x.size()) +
                         ", expected " + std::to_string(mean_.size()));
  }
  return factor_->triangularView<Eigen::Lower>().solve(x - mean_);
}

double gaussian_log_pdf(const GaussianSpec& spec, const Vector& x) {
  return spec.log_normalizer() - 0.5 * spec.whiten(x).squaredNorm();
}

double gaussian_pdf(const GaussianSpec& spec, const Vector& x) {
  return std::exp(gaussian_log_pdf(spec, x));
}

double standard_normal_log_pdf(double x) { return -0.5 * x * x - kHalfLog2Pi; }

double standard_normal_pdf(double x) { return std::exp(standard_normal_log_pdf(x)); }

double hermite_he(int n, double x) {
  if (n < 0) throw PreconditionError("hermite_he: negative degree");
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<double> hermite_he_table(int max_degree, double x) {
  std::vector<double> he(static_cast<std::size_t>(max_degree) + 1);
  he[0] = 1.0;
  if (max_degree >= 1) he[1] = x;
  for (int k = 1; k < max_degree; ++k) he[k + 1] = x * he[k] - k * he[k - 1];
  return he;
}

// ---------------------------------------------------------------------------

PceExpansion::PceExpansion(Matrix coefficients, std::vector<MultiIndex> multi_indices,
                           std::size_t germ_dim)
    : coefficients_(std::move(coefficients)),
      multi_indices_(std::move(multi_indices)),
      germ_dim_(germ_dim) {
  if (germ_dim_ == 0) throw PreconditionError("PceExpansion: germ dimension must be positive");
  if (static_cast<std::size_t>(coefficients_.cols()) != multi_indices_.size()) {
    throw DimensionError("PceExpansion: " + std::to_string(multi_indices_.size()) +
                         " multi-indices but " + std::to_string(coefficients_.cols()) +
                         " coefficient columns");
  }
  if (coefficients_.rows() == 0) throw DimensionError("PceExpansion: zero output dimension");
  std::set<MultiIndex> seen;
  for (const auto& alpha : multi_indices_) {
    if (alpha.size() != germ_dim_) {
      throw DimensionError("PceExpansion: multi-index length differs from germ dimension");
    }
    for (int a : alpha) {
      if (a < 0) throw PreconditionError("PceExpansion: negative exponent in multi-index");
      max_degree_ = std::max(max_degree_, a);
    }
    if (!seen.insert(alpha).second) {
      throw PreconditionError("PceExpansion: duplicate multi-index");
    }
  }
}

Vector PceExpansion::mean() const {
  Vector m = Vector::Zero(coefficients_.rows());
  for (std::size_t k = 0; k < multi_indices_.size(); ++k) {
    const auto& alpha = multi_indices_[k];
    if (std::all_of(alpha.begin(), alpha.end(), [](int a) { return a == 0; })) {
      m += coefficients_.col(static_cast<Eigen::Index>(k));
    }
  }
  return m;
}

Matrix PceExpansion::covariance() const {
  const auto out = coefficients_.rows();
  Matrix c = Matrix::Zero(out, out);
  for (std::size_t k = 0; k < multi_indices_.size(); ++k) {
    double norm = 1.0;
    bool constant = true;
    for (int a : multi_indices_[k]) {
      constant = constant && a == 0;
      for (int j = 2; j <= a; ++j) norm *= j;
    }
    if (constant) continue;
    const auto col = coefficients_.col(static_cast<Eigen::Index>(k));
    c += norm * col * col.transpose();
  }
  return c;
}

Vector evaluate_pce(const PceExpansion& pce, const Vector& germ) {
  if (static_cast<std::size_t>(germ.size()) != pce.germ_dim_) {
    throw DimensionError("evaluate_pce: germ has dimension " + std::to_string(germ.size()) +
                         ", expected " + std::to_string(pce.germ_dim_));
  }
  std::vector<std::vector<double>> tables;
  tables.reserve(pce.germ_dim_);
  for (Eigen::Index d = 0; d < germ.size(); ++d) {
    tables.push_back(hermite_he_table(pce.max_degree_, germ(d)));
  }
  Vector out = Vector::Zero(pce.coefficients_.rows());
  for (std::size_t k = 0; k < pce.multi_indices_.size(); ++k) {
    double psi = 1.0;
    const auto& alpha = pce.multi_indices_[k];
    for (std::size_t d = 0; d < alpha.size(); ++d) psi *= tables[d][alpha[d]];
    out += psi * pce.coefficients_.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

// ---------------------------------------------------------------------------

ScalarPolynomial::ScalarPolynomial(std::vector<double> ascending)
    : coefficients_(std::move(ascending)) {
  while (coefficients_.size() > 1 && coefficients_.back() == 0.0) coefficients_.pop_back();
  if (coefficients_.empty()) coefficients_.push_back(0.0);
}

double ScalarPolynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

ScalarPolynomial ScalarPolynomial::derivative() const {
  if (coefficients_.size() <= 1) return ScalarPolynomial({0.0});
  std::vector<double> d(coefficients_.size() - 1);
  for (std::size_t k = 1; k < coefficients_.size(); ++k) {
    d[k - 1] = static_cast<double>(k) * coefficients_[k];
  }
  return ScalarPolynomial(std::move(d));
}

std::vector<double> ScalarPolynomial::real_roots(double value) const {
  const int n = degree();
  std::vector<double> roots;
  if (n <= 0) return roots;
  std::vector<double> c = coefficients_;
  c[0] -= value;
  if (n == 1) {
    roots.push_back(-c[0] / c[1]);
    return roots;
  }
  Matrix companion = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Matrix> solver(companion, false);
  const ScalarPolynomial shifted(c);
  const ScalarPolynomial slope = shifted.derivative();
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const auto z = solver.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-9 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int iter = 0; iter < 3; ++iter) {
      const double fx = shifted(x);
      const double dx = slope(x);
      if (dx == 0.0) break;
      const double candidate = x - fx / dx;
      if (!(std::abs(shifted(candidate)) < std::abs(fx))) break;
      x = candidate;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

bool ScalarPolynomial::is_monotone() const {
  const int n = degree();
  if (n == 1) return true;
  if (n < 1 || n % 2 == 0) return false;
  const ScalarPolynomial slope = derivative();
  const double sign = coefficients_.back() > 0.0 ? 1.0 : -1.0;
  double scale = 0.0;
  for (double a : slope.coefficients()) scale = std::max(scale, std::abs(a));
  for (double x : slope.derivative().real_roots()) {
    if (sign * slope(x) < -1e-12 * scale) return false;
  }
  return true;
}

double ScalarPolynomial::invert(double value) const {
  if (!is_monotone()) {
    throw PreconditionError("ScalarPolynomial::invert: polynomial is not monotone");
  }
  const bool increasing = coefficients_.back() > 0.0;
  auto g = [&](double x) { return increasing ? (*this)(x) - value : value - (*this)(x); };
  double lo = -1.0;
  double hi = 1.0;
  while (g(lo) > 0.0) lo *= 2.0;
  while (g(hi) < 0.0) hi *= 2.0;
  for (int iter = 0; iter < 2000 && hi - lo > 0.0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
}

ScalarPolynomial ScalarPolynomial::from_hermite(const std::vector<double>& hermite_coefficients) {
  const std::size_t n = hermite_coefficients.size();
  std::vector<double> out(std::max<std::size_t>(n, 1), 0.0);
  std::vector<double> prev{1.0};  // He_0
  std::vector<double> cur{0.0, 1.0};  // He_1
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<double>& he = k == 0 ? prev : cur;
    for (std::size_t j = 0; j < he.size(); ++j) out[j] += hermite_coefficients[k] * he[j];
    if (k >= 1) {
      std::vector<double> next(cur.size() + 1, 0.0);
      for (std::size_t j = 0; j < cur.size(); ++j) next[j + 1] += cur[j];
      for (std::size_t j = 0; j < prev.size(); ++j) next[j] -= static_cast<double>(k) * prev[j];
      prev = std::move(cur);
      cur = std::move(next);
    }
  }
  return ScalarPolynomial(std::move(out));
}

double density_of_polynomial_rv(const ScalarPolynomial& poly, double q,
                                const ScalarDensity& germ_density, double derivative_tol) {
  if (poly.degree() < 1) {
    throw PreconditionError("density_of_polynomial_rv: polynomial degree must be >= 1");
  }
  const ScalarPolynomial slope = poly.derivative();
  double total = 0.0;
  for (double r : poly.real_roots(q)) {
    const double d = std::abs(slope(r));
    if (d < derivative_tol) {
      throw DegenerateDensityError("density_of_polynomial_rv: unbounded density at q = " +
                                   std::to_string(q));
    }
    total += germ_density(r) / d;
  }
  return total;
}

double log_density_of_polynomial_rv(const ScalarPolynomial& poly, double q,
                                    double derivative_tol) {
  if (poly.degree() < 1) {
    throw PreconditionError("log_density_of_polynomial_rv: polynomial degree must be >= 1");
  }
  const ScalarPolynomial slope = poly.derivative();
  std::vector<double> terms;
  for (double r : poly.real_roots(q)) {
    const double d = std::abs(slope(r));
    if (d < derivative_tol) {
      throw DegenerateDensityError("log_density_of_polynomial_rv: unbounded density at q = " +
                                   std::to_string(q));
    }
    terms.push_back(standard_normal_log_pdf(r) - std::log(d));
  }
  return log_sum_exp(terms);
}

}  // namespace condexp
