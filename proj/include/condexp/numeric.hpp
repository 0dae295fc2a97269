#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace condexp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Fixed-order pairwise summation of term(0) + ... + term(n-1). The split
// points depend only on n, so the result is reproducible bit for bit.
template <typename Term>
double pairwise_sum(std::size_t begin, std::size_t end, const Term& term) {
  constexpr std::size_t kBlock = 64;
  if (end - begin <= kBlock) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += term(i);
    return acc;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

double pairwise_sum(std::span<const double> values);

// log(sum(exp(v))) with max-centering; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> log_values);

// Moore-Penrose pseudo-inverse; singular values below
// rel_tol * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& a, double rel_tol = 1e-12);

// Symmetric PSD square root via eigendecomposition. Eigenvalues below
// rel_tol * max are clamped to zero.
Matrix symmetric_sqrt(const Matrix& a, double rel_tol = 1e-12);

// Pseudo-inverse of the symmetric PSD square root, same clamping rule.
Matrix symmetric_inverse_sqrt(const Matrix& a, double rel_tol = 1e-12);

// Averages a and a^T so the result is exactly symmetric.
Matrix symmetrized(const Matrix& a);

// Ascending eigenvalues / matching eigenvectors of a symmetric matrix.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

// Inclusive linspace(start, stop, count); count == 1 yields {start}.
std::vector<double> linspace(double start, double stop, std::size_t count);

}  // namespace condexp
