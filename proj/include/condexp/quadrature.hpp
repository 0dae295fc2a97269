#pragma once

#include "condexp/numeric.hpp"

#include <cstdint>
#include <vector>

namespace condexp {

/// Integration rule over the germ space with respect to a probability
/// measure: nodes are rows of an (n_points x dim) matrix, weights are
/// strictly positive and sum to one.
///
/// Weights are held in log form. Gauss-Hermite rules of high order have tail
/// weights far below the smallest double (order 512 reaches e^-1000), and the
/// likelihood weighting downstream happens in log space anyway.
class QuadratureRule {
 public:
  QuadratureRule(Matrix nodes, Vector log_weights);

  /// Builds a rule from plain weights; every weight must be > 0.
  static QuadratureRule from_weights(Matrix nodes, const Vector& weights);

  std::size_t size() const { return static_cast<std::size_t>(nodes_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(nodes_.cols()); }
  const Matrix& nodes() const { return nodes_; }
  const Vector& log_weights() const { return log_weights_; }

  /// exp(log_weights); entries may underflow to 0 for extreme tail nodes.
  Vector weights() const;

  Vector node(std::size_t i) const { return nodes_.row(static_cast<Eigen::Index>(i)).transpose(); }

 private:
  Matrix nodes_;
  Vector log_weights_;
};

inline constexpr int kMaxGaussHermiteOrder = 512;

/// Gauss-Hermite rule for the standard normal measure (Golub-Welsch).
QuadratureRule gauss_hermite_1d(int order);

/// Cartesian product of rules; node weights multiply.
QuadratureRule tensor_product(const std::vector<QuadratureRule>& rules);

/// Isotropic tensor Gauss-Hermite rule of the given order per dimension.
QuadratureRule gauss_hermite(std::size_t dim, int order);

/// n i.i.d. standard-normal nodes with weight 1/n each.
///
/// Stream: std::mt19937_64 seeded with `seed`; each pair of 64-bit draws
/// u1, u2 is mapped to (0,1] by ((x >> 11) + 1) * 2^-53 and converted by the
/// Box-Muller transform, radius sqrt(-2 ln u1) and angle 2 pi u2, yielding
/// cos then sin. Nodes are filled row-major. The stream is fully specified so
/// runs are bit-reproducible across platforms.
QuadratureRule monte_carlo(std::size_t dim, std::size_t n, std::uint64_t seed);

/// Composite Gauss-Legendre rule for the standard normal measure: `panels`
/// equal panels on [-half_width, half_width], `points_per_panel` Legendre
/// nodes each, weights w_GL * phi(x) renormalized to sum one.
QuadratureRule gauss_legendre_normal_1d(int panels, int points_per_panel, double half_width);

/// Isotropic tensor version of gauss_legendre_normal_1d.
QuadratureRule gauss_legendre_normal(std::size_t dim, int panels, int points_per_panel,
                                     double half_width);

/// Gauss-Legendre nodes/weights on [-1, 1] (Golub-Welsch), weights sum to 2.
void gauss_legendre_reference(int order, Vector& nodes, Vector& weights);

}  // namespace condexp
