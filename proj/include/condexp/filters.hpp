#pragma once

#include "condexp/cde.hpp"
#include "condexp/forward.hpp"
#include "condexp/numeric.hpp"
#include "condexp/quadrature.hpp"

#include <iosfwd>
#include <vector>

namespace condexp {

/// Weighted samples of (xi, theta) with the prior parameter Q(xi) and the
/// measurement Z(xi, theta). Every matrix has one row per sample.
struct Ensemble {
  Matrix xi;
  Matrix theta;
  Vector weights;
  Matrix q;
  Matrix z;

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  /// Throws when sample counts differ or weights are not positive / unit-sum.
  void validate() const;
};

/// Tensor combination of xi- and theta-rule nodes with product weights.
Ensemble build_ensemble(const InverseProblem& problem, const QuadratureRule& xi_rule,
                        const QuadratureRule& theta_rule);

Vector weighted_mean(const Matrix& samples, const Vector& weights);
/// Weighted covariance E[(a - Ea)(b - Eb)^T] between the columns of a and b.
Matrix weighted_cross_covariance(const Matrix& a, const Matrix& b, const Vector& weights);

/// K = C_QZ pinv(C_ZZ); singular values of C_ZZ below 1e-12 sigma_max are dropped.
Matrix kalman_gain(const Ensemble& ensemble);

/// All multi-indices over `dim` variables with total degree <= degree,
/// ordered by total degree then lexicographically (descending first index).
std::vector<std::vector<int>> total_degree_indices(std::size_t dim, int degree);

inline constexpr int kMaxPolynomialDegree = 20;
inline constexpr double kConditionWarning = 1e12;

/// Least-squares polynomial approximation y -> W(y) of a conditional
/// expectation, in a standardized measurement variable s = (y - shift) / scale.
struct PolynomialCeMap {
  int degree = 0;
  std::vector<std::vector<int>> basis;
  Matrix coefficients;  // output dim x basis size
  Vector shift;
  Vector scale;
  // sqrt(sum_i w_i |target_i - W(z_i)|^2)
  double residual = 0.0;
  // Estimated from the pivoted R factor of the equilibrated design matrix.
  double condition_estimate = 1.0;
  bool ill_conditioned = false;
  std::size_t rank = 0;

  std::size_t input_dim() const { return static_cast<std::size_t>(shift.size()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(coefficients.rows()); }
};

/// Weighted least-squares fit of targets (one row per sample) by a total
/// degree <= degree polynomial in the measurements z. Column-pivoted
/// Householder QR with weight square roots folded into the rows and
/// columns equilibrated; columns with |R_jj| below 1e-12 |R_00| are dropped.
PolynomialCeMap fit_polynomial_regression(const Matrix& z, const Matrix& targets,
                                          const Vector& weights, int degree);

/// Polynomial approximation of E(Q|Z) of total degree k.
PolynomialCeMap fit_polynomial_ce(const Ensemble& ensemble, int degree);

Vector evaluate_ce_map(const PolynomialCeMap& map, const Vector& y);

/// Evaluates the map at every row of z.
Matrix evaluate_ce_map_rows(const PolynomialCeMap& map, const Matrix& z);

/// q_i <- q_i - W(z_i) + W(y_hat). With degree 1 this is the
/// Gauss-Markov-Kalman update.
Ensemble apply_filter(const Ensemble& ensemble, const PolynomialCeMap& map, const Vector& y_hat);

/// q_i <- W(y_hat) + C^{1/2} pinv(C_RR^{1/2}) (q_i - W(z_i)) so the updated
/// ensemble carries the target covariance C. Eigenvalues below 1e-12 max are
/// clamped to zero in both square roots.
Ensemble covariance_corrected_filter(const Ensemble& ensemble, const PolynomialCeMap& map,
                                     const Vector& y_hat, const Matrix& target_cov);

/// Polynomial approximation of the conditional covariance at y:
/// fits the centered products Qbar_a Qbar_b, Qbar = Q - W_k(y), by a degree-k
/// polynomial in Z and evaluates it at y. Unlike the conditioned covariance
/// this is not guaranteed to be positive semi-definite.
Matrix polynomial_conditional_covariance(const Ensemble& ensemble, int degree, const Vector& y);

/// Exact CE-mean filter realized pointwise: q_i <- q_i - E(Q|Z)(z_i) + E(Q|Z)(y_hat),
/// each conditional expectation evaluated by the engine. Costs one engine
/// query per sample (O(n * rule size) density evaluations).
Ensemble cde_mean_filter(const Ensemble& ensemble, const PosteriorEngine& engine, const Vector& y_hat);

/// CSV columns: weight, xi1.., theta1.., q1.., z1.. (shortest round-trip numbers).
void write_ensemble_csv(const Ensemble& ensemble, std::ostream& out);
Ensemble read_ensemble_csv(std::istream& in);

}  // namespace condexp
