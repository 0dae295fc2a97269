#include "condexp/numeric.hpp"

#include "condexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace condexp {

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum(0, values.size(), [&](std::size_t i) { return values[i]; });
}

double log_sum_exp(std::span<const double> log_values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : log_values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  const double total = pairwise_sum(
      0, log_values.size(), [&](std::size_t i) { return std::exp(log_values[i] - peak); });
  return peak + std::log(total);
}

Matrix pseudo_inverse(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return Matrix(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

template <typename F>
Matrix spectral_apply(const Matrix& a, double rel_tol, F&& f) {
  if (a.rows() != a.cols()) throw DimensionError("spectral function of a non-square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a));
  const Vector& lambda = eig.eigenvalues();
  const double top = lambda.size() > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0;
  Vector mapped(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    mapped(i) = lambda(i) <= rel_tol * top ? 0.0 : f(lambda(i));
  }
  return symmetrized(eig.eigenvectors() * mapped.asDiagonal() * eig.eigenvectors().transpose());
}

}  // namespace

Matrix symmetric_sqrt(const Matrix& a, double rel_tol) {
  return spectral_apply(a, rel_tol, [](double x) { return std::sqrt(x); });
}

Matrix symmetric_inverse_sqrt(const Matrix& a, double rel_tol) {
  return spectral_apply(a, rel_tol, [](double x) { return 1.0 / std::sqrt(x); });
}

Matrix symmetrized(const Matrix& a) {
  Matrix out = a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw Error("symmetric eigendecomposition failed");
  return {eig.eigenvalues(), eig.eigenvectors()};
}

std::vector<double> linspace(double start, double stop, std::size_t count) {
  std::vector<double> out;
  if (count == 0) return out;
  out.reserve(count);
  if (count == 1) {
    out.push_back(start);
    return out;
  }
  const double step = (stop - start) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i + 1 < count; ++i) out.push_back(start + step * static_cast<double>(i));
  out.push_back(stop);
  return out;
}

}  // namespace condexp
