#pragma once

#include "condexp/forward.hpp"
#include "condexp/numeric.hpp"
#include "condexp/quadrature.hpp"

#include <functional>
#include <vector>

namespace condexp {

/// Conditioned mean/covariance of the parameter at one observation value.
struct PosteriorSummary {
  enum Flag : unsigned {
    kNone = 0,
    // effective_sample_fraction below kLowAccuracyFraction
    kLowAccuracy = 1u << 0,
    // every likelihood weight underflowed; mean/covariance are empty and
    // log_evidence holds the log denominator that triggered the flag
    kVanishingEvidence = 1u << 1,
  };

  Vector observation;
  Vector mean;
  Matrix covariance;
  double log_evidence = 0.0;
  double effective_sample_fraction = 0.0;
  unsigned flags = kNone;

  bool has_moments() const { return (flags & kVanishingEvidence) == 0; }
};

inline constexpr double kLowAccuracyFraction = 1e-3;
// exp() underflows below this; a log denominator under it has no mass left.
inline constexpr double kVanishingLogEvidence = -745.0;

struct EngineOptions {
  // Worker threads for per-node work. Results do not depend on this value.
  unsigned threads = 1;
};

/// Likelihood-weighted integration over the prior germ space.
///
/// E(X|Z)(y) = sum_i w_i X(xi_i, theta*_i) f_E(y - Y(xi_i)) / sum_j w_j f_E(y - Y(xi_j))
/// with theta*_i = E^{-1}(y - Y(xi_i)). Parameter values Q(xi_i) and
/// observations Y(xi_i) are evaluated once at construction and shared by all
/// subsequent queries, so sweeps over many y cost one forward pass.
class PosteriorEngine {
 public:
  using GermFunctional = std::function<Vector(const Vector& xi)>;
  using JointFunctional = std::function<Vector(const Vector& xi, const Vector& theta)>;

  PosteriorEngine(InverseProblem problem, QuadratureRule rule, EngineOptions options = {});

  const InverseProblem& problem() const { return problem_; }
  const QuadratureRule& rule() const { return rule_; }

  /// Q(xi_i), one row per node.
  const Matrix& parameters() const { return parameters_; }
  /// Y(xi_i), one row per node.
  const Matrix& observations() const { return observations_; }

  Vector expectation(const GermFunctional& functional, const Vector& y_hat) const;
  /// Requires an invertible error model.
  Vector expectation(const JointFunctional& functional, const Vector& y_hat) const;

  Vector mean(const Vector& y_hat) const;
  Matrix covariance(const Vector& y_hat) const;

  /// Throws VanishingEvidenceError when the evidence underflows.
  PosteriorSummary summarize(const Vector& y_hat) const;

  /// Like summarize() but never throws for vanishing evidence; such points
  /// come back flagged.
  std::vector<PosteriorSummary> sweep(const std::vector<Vector>& y_values) const;

  /// log sum_i w_i f_E(y - Y(xi_i)); may be -inf.
  double log_evidence(const Vector& y_hat) const;

 private:
  struct Weighting {
    std::vector<double> normalized;  // posterior weights, sum one
    double log_evidence = 0.0;
    double effective_sample_fraction = 0.0;
  };

  Weighting weigh(const Vector& y_hat) const;
  Vector expectation_at_nodes(const std::function<Vector(std::size_t)>& value,
                              const Vector& y_hat) const;
  std::vector<double> log_likelihoods(const Vector& y_hat) const;
  Vector weighted_mean(const std::vector<double>& p) const;
  Matrix weighted_covariance(const std::vector<double>& p, const Vector& center) const;

  InverseProblem problem_;
  QuadratureRule rule_;
  EngineOptions options_;
  Matrix parameters_;
  Matrix observations_;
};

Vector conditioned_expectation(const InverseProblem& problem,
                               const PosteriorEngine::GermFunctional& functional,
                               const QuadratureRule& rule, const Vector& y_hat);
Vector conditioned_expectation(const InverseProblem& problem,
                               const PosteriorEngine::JointFunctional& functional,
                               const QuadratureRule& rule, const Vector& y_hat);
Vector conditioned_mean(const InverseProblem& problem, const QuadratureRule& rule,
                        const Vector& y_hat);
Matrix conditioned_covariance(const InverseProblem& problem, const QuadratureRule& rule,
                              const Vector& y_hat);
PosteriorSummary summarize(const InverseProblem& problem, const QuadratureRule& rule,
                           const Vector& y_hat);
std::vector<PosteriorSummary> sweep(const InverseProblem& problem, const QuadratureRule& rule,
                                    const std::vector<Vector>& y_values);

/// Log densities f_E(residual_i) for every row of `residuals`.
std::vector<double> error_log_density_rows(const ErrorModel& error, const Matrix& residuals);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; callers write to disjoint slots only.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace condexp
