#pragma once

#include "condexp/numeric.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace condexp {

/// Multivariate normal law N(mean, covariance).
///
/// The covariance must be stored exactly symmetric and be positive definite.
/// Its Cholesky factor is computed once at construction and shared by copies,
/// so density evaluations in quadrature loops cost one triangular solve.
class GaussianSpec {
 public:
  GaussianSpec(Vector mean, Matrix covariance);

  /// Scalar convenience: N(mean, variance).
  static GaussianSpec scalar(double mean, double variance);

  /// Standard normal of the given dimension.
  static GaussianSpec standard(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }

  /// Lower-triangular L with L L^T = covariance.
  const Matrix& cholesky_factor() const { return *factor_; }

  /// mean + L * germ, the reparameterization used by priors and errors.
  Vector transform(const Vector& germ) const;

  /// L^{-1} (x - mean), the inverse of transform().
  Vector whiten(const Vector& x) const;

  double log_normalizer() const { return log_normalizer_; }

 private:
  Vector mean_;
  Matrix covariance_;
  std::shared_ptr<const Matrix> factor_;
  double log_normalizer_ = 0.0;
};

double gaussian_pdf(const GaussianSpec& spec, const Vector& x);
double gaussian_log_pdf(const GaussianSpec& spec, const Vector& x);

double standard_normal_pdf(double x);
double standard_normal_log_pdf(double x);

/// Probabilists' Hermite polynomial He_n(x).
double hermite_he(int n, double x);

/// He_0(x) .. He_{max_degree}(x) by the three-term recurrence.
std::vector<double> hermite_he_table(int max_degree, double x);

using MultiIndex = std::vector<int>;

/// Random variable Q(xi) = sum_k coefficients[:, k] * psi_k(xi), where psi_k is
/// the product over germ dimensions of He_{alpha_k[d]}(xi_d).
class PceExpansion {
 public:
  PceExpansion(Matrix coefficients, std::vector<MultiIndex> multi_indices, std::size_t germ_dim);

  std::size_t germ_dim() const { return germ_dim_; }
  std::size_t output_dim() const { return static_cast<std::size_t>(coefficients_.rows()); }
  std::size_t num_terms() const { return multi_indices_.size(); }
  const Matrix& coefficients() const { return coefficients_; }
  const std::vector<MultiIndex>& multi_indices() const { return multi_indices_; }

  Vector mean() const;
  /// Exact covariance from the orthogonality relation E[He_j He_k] = k! delta_jk.
  Matrix covariance() const;

 private:
  Matrix coefficients_;
  std::vector<MultiIndex> multi_indices_;
  std::size_t germ_dim_;
  int max_degree_ = 0;

  friend Vector evaluate_pce(const PceExpansion&, const Vector&);
};

Vector evaluate_pce(const PceExpansion& pce, const Vector& germ);

/// Real polynomial with coefficients in ascending degree order. Trailing
/// zeros are trimmed on construction.
class ScalarPolynomial {
 public:
  ScalarPolynomial() : coefficients_{0.0} {}
  explicit ScalarPolynomial(std::vector<double> ascending);

  int degree() const { return static_cast<int>(coefficients_.size()) - 1; }
  const std::vector<double>& coefficients() const { return coefficients_; }

  double operator()(double x) const;
  ScalarPolynomial derivative() const;

  /// Real roots of p(x) = value, ascending. Companion-matrix eigenvalues with
  /// imaginary parts below 1e-9 * (1 + |re|) are accepted, then Newton-polished.
  std::vector<double> real_roots(double value = 0.0) const;

  /// True when p is strictly monotone on the real line.
  bool is_monotone() const;

  /// Unique real solution of p(x) = value. Requires is_monotone().
  double invert(double value) const;

  /// Monomial form of sum_k c_k He_k(x).
  static ScalarPolynomial from_hermite(const std::vector<double>& hermite_coefficients);

 private:
  std::vector<double> coefficients_;
};

using ScalarDensity = std::function<double(double)>;

inline constexpr double kRootDerivativeTolerance = 1e-12;

/// Density of poly(theta) at q for theta with density germ_density:
/// sum over real roots r of poly(r) = q of germ_density(r) / |poly'(r)|.
double density_of_polynomial_rv(const ScalarPolynomial& poly, double q,
                                const ScalarDensity& germ_density = standard_normal_pdf,
                                double derivative_tol = kRootDerivativeTolerance);

/// Log of the same density for a standard normal germ, computed by
/// log-sum-exp over the roots; -inf when no real root exists.
double log_density_of_polynomial_rv(const ScalarPolynomial& poly, double q,
                                    double derivative_tol = kRootDerivativeTolerance);

}  // namespace condexp
