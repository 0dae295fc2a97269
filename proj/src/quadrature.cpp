#include "condexp/quadrature.hpp"

#include "condexp/errors.hpp"
#include "condexp/prob.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace condexp {

QuadratureRule::QuadratureRule(Matrix nodes, Vector log_weights)
    : nodes_(std::move(nodes)), log_weights_(std::move(log_weights)) {
  if (nodes_.rows() != log_weights_.size()) {
    throw DimensionError("QuadratureRule: " + std::to_string(nodes_.rows()) + " nodes but " +
                         std::to_string(log_weights_.size()) + " weights");
  }
  if (nodes_.rows() == 0) throw PreconditionError("QuadratureRule: empty rule");
  if (!log_weights_.allFinite()) {
    throw PreconditionError("QuadratureRule: weights must be strictly positive and finite");
  }
  const double total = log_sum_exp({log_weights_.data(), static_cast<std::size_t>(log_weights_.size())});
  if (std::abs(total) > 1e-12) {
    throw PreconditionError("QuadratureRule: weights must sum to one");
  }
}

QuadratureRule QuadratureRule::from_weights(Matrix nodes, const Vector& weights) {
  if ((weights.array() <= 0.0).any()) {
    throw PreconditionError("QuadratureRule: weights must be strictly positive");
  }
  return QuadratureRule(std::move(nodes), weights.array().log().matrix());
}

Vector QuadratureRule::weights() const { return log_weights_.array().exp().matrix(); }

namespace {

Vector normalized_log(Vector log_w) {
  const double total = log_sum_exp({log_w.data(), static_cast<std::size_t>(log_w.size())});
  log_w.array() -= total;
  return log_w;
}

// For the orthonormal Hermite family p_k = He_k / sqrt(k!), returns
// log(sum_{k<n} p_k(x)^2) and the ratio p_n(x) / p_{n-1}(x). Values are
// rescaled on the fly; p_k(x) overflows a double for the outer nodes of
// high-order rules.
struct HermiteSums {
  double log_sum_sq;
  double ratio;
};

HermiteSums orthonormal_hermite_sums(int n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  double sum_sq = 1.0;
  double log_scale = 0.0;  // true value = stored * exp(log_scale)
  for (int k = 0; k + 1 < n; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
    sum_sq += cur * cur;
    if (std::abs(cur) > 1e100) {
      prev *= 1e-100;
      cur *= 1e-100;
      sum_sq *= 1e-200;
      log_scale += 100.0 * std::numbers::ln10;
    }
  }
  const double next = (x * cur - std::sqrt(static_cast<double>(n - 1)) * prev) /
                      std::sqrt(static_cast<double>(n));
  return {std::log(sum_sq) + 2.0 * log_scale, next / cur};
}

}  // namespace

QuadratureRule gauss_hermite_1d(int order) {
  if (order < 1 || order > kMaxGaussHermiteOrder) {
    throw PreconditionError("gauss_hermite_1d: order " + std::to_string(order) +
                            " outside [1, " + std::to_string(kMaxGaussHermiteOrder) + "]");
  }
  if (order == 1) return QuadratureRule(Matrix::Zero(1, 1), Vector::Zero(1));
  // Jacobi matrix of the monic recurrence He_{k+1} = x He_k - k He_{k-1}.
  Vector diag = Vector::Zero(order);
  Vector sub(order - 1);
  for (int k = 1; k < order; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  Vector x = eig.eigenvalues();

  Vector log_w(order);
  for (int i = 0; i < order; ++i) {
    for (int iter = 0; iter < 2; ++iter) {
      const HermiteSums s = orthonormal_hermite_sums(order, x(i));
      // p_n' = sqrt(n) p_{n-1}
      x(i) -= s.ratio / std::sqrt(static_cast<double>(order));
    }
    log_w(i) = -orthonormal_hermite_sums(order, x(i)).log_sum_sq;
  }
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double node = 0.5 * (x(j) - x(i));
    const double lw = 0.5 * (log_w(i) + log_w(j));
    x(i) = -node;
    x(j) = node;
    log_w(i) = lw;
    log_w(j) = lw;
  }
  if (order % 2 == 1) x(order / 2) = 0.0;
  return QuadratureRule(Matrix(x), normalized_log(std::move(log_w)));
}

QuadratureRule tensor_product(const std::vector<QuadratureRule>& rules) {
  if (rules.empty()) throw PreconditionError("tensor_product: empty rule list");
  Eigen::Index total = 1;
  Eigen::Index dim = 0;
  for (const auto& r : rules) {
    total *= static_cast<Eigen::Index>(r.size());
    dim += static_cast<Eigen::Index>(r.dim());
  }
  Matrix nodes(total, dim);
  Vector log_w(total);
  // The first factor varies slowest.
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    Eigen::Index rem = flat;
    Eigen::Index col = dim;
    double lw = 0.0;
    for (auto it = rules.rbegin(); it != rules.rend(); ++it) {
      const auto n = static_cast<Eigen::Index>(it->size());
      const auto d = static_cast<Eigen::Index>(it->dim());
      const Eigen::Index idx = rem % n;
      rem /= n;
      col -= d;
      nodes.block(flat, col, 1, d) = it->nodes().row(idx);
      lw += it->log_weights()(idx);
    }
    log_w(flat) = lw;
  }
  return QuadratureRule(std::move(nodes), normalized_log(std::move(log_w)));
}

QuadratureRule gauss_hermite(std::size_t dim, int order) {
  if (dim == 0) throw PreconditionError("gauss_hermite: dimension must be positive");
  const QuadratureRule one = gauss_hermite_1d(order);
  if (dim == 1) return one;
  return tensor_product(std::vector<QuadratureRule>(dim, one));
}

QuadratureRule monte_carlo(std::size_t dim, std::size_t n, std::uint64_t seed) {
  if (dim == 0 || n == 0) {
    throw PreconditionError("monte_carlo: dimension and sample count must be positive");
  }
  std::mt19937_64 engine(seed);
  auto unit = [&engine]() {
    return (static_cast<double>(engine() >> 11) + 1.0) * 0x1.0p-53;
  };
  Matrix nodes(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  const std::size_t total = n * dim;
  std::size_t filled = 0;
  while (filled < total) {
    const double radius = std::sqrt(-2.0 * std::log(unit()));
    const double angle = 2.0 * std::numbers::pi * unit();
    for (double v : {radius * std::cos(angle), radius * std::sin(angle)}) {
      if (filled == total) break;
      nodes(static_cast<Eigen::Index>(filled / dim), static_cast<Eigen::Index>(filled % dim)) = v;
      ++filled;
    }
  }
  Vector log_w = Vector::Constant(static_cast<Eigen::Index>(n), -std::log(static_cast<double>(n)));
  return QuadratureRule(std::move(nodes), std::move(log_w));
}

void gauss_legendre_reference(int order, Vector& nodes, Vector& weights) {
  if (order < 1) throw PreconditionError("gauss_legendre_reference: order must be positive");
  if (order == 1) {
    nodes = Vector::Zero(1);
    weights = Vector::Constant(1, 2.0);
    return;
  }
  Vector diag = Vector::Zero(order);
  Vector sub(order - 1);
  for (int k = 1; k < order; ++k) {
    const double kk = static_cast<double>(k);
    sub(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  nodes = eig.eigenvalues();
  weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square().matrix();
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double node = 0.5 * (nodes(j) - nodes(i));
    const double w = 0.5 * (weights(i) + weights(j));
    nodes(i) = -node;
    nodes(j) = node;
    weights(i) = w;
    weights(j) = w;
  }
  if (order % 2 == 1) nodes(order / 2) = 0.0;
}

QuadratureRule gauss_legendre_normal_1d(int panels, int points_per_panel, double half_width) {
  if (panels < 1 || points_per_panel < 1 || !(half_width > 0.0)) {
    throw PreconditionError("gauss_legendre_normal_1d: panels, points and half width must be positive");
  }
  Vector t;
  Vector wt;
  gauss_legendre_reference(points_per_panel, t, wt);
  const double h = 2.0 * half_width / panels;
  const Eigen::Index n = static_cast<Eigen::Index>(panels) * points_per_panel;
  Matrix nodes(n, 1);
  Vector log_w(n);
  for (int p = 0; p < panels; ++p) {
    const double left = -half_width + h * p;
    for (int j = 0; j < points_per_panel; ++j) {
      const Eigen::Index i = static_cast<Eigen::Index>(p) * points_per_panel + j;
      const double x = left + 0.5 * h * (t(j) + 1.0);
      nodes(i, 0) = x;
      log_w(i) = std::log(0.5 * h * wt(j)) + standard_normal_log_pdf(x);
    }
  }
  return QuadratureRule(std::move(nodes), normalized_log(std::move(log_w)));
}

QuadratureRule gauss_legendre_normal(std::size_t dim, int panels, int points_per_panel,
                                     double half_width) {
  if (dim == 0) throw PreconditionError("gauss_legendre_normal: dimension must be positive");
  const QuadratureRule one = gauss_legendre_normal_1d(panels, points_per_panel, half_width);
  if (dim == 1) return one;
  return tensor_product(std::vector<QuadratureRule>(dim, one));
}

}  // namespace condexp
