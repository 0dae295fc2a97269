#pragma once

#include "condexp/forward.hpp"
#include "condexp/numeric.hpp"

#include <iosfwd>
#include <vector>

namespace condexp {

/// Uniform axis [lower, upper] with `points` nodes (inclusive).
struct GridAxis {
  double lower;
  double upper;
  std::size_t points;
};

/// Posterior density sampled on a tensor grid in parameter space.
///
/// values are stored with the last axis varying fastest. They are normalized
/// so the trapezoidal integral is one; log_evidence is the log of the
/// trapezoidal integral of f_E(y - Y_Q(q)) f_Q(q) before normalization.
struct GridDensity {
  std::vector<Vector> axes;
  std::vector<double> values;
  double log_evidence = 0.0;

  std::size_t dim() const { return axes.size(); }
};

/// f_E(y_hat - Y_Q(q)).
double likelihood(const InverseProblem& problem, const Vector& q, const Vector& y_hat);

/// log f_Q(q) for Gaussian priors and one-dimensional PCE priors.
/// Throws UnsupportedPriorError otherwise.
double prior_log_density(const Prior& prior, const Vector& q);

/// Mean +- 8 prior standard deviations per parameter, 4001 points for one
/// parameter and 801 per axis for two.
std::vector<GridAxis> default_grid(const InverseProblem& problem);

inline constexpr std::size_t kMaxOracleDim = 2;

GridDensity posterior_density(const InverseProblem& problem, const std::vector<GridAxis>& grid,
                              const Vector& y_hat);

struct PosteriorMoments {
  Vector mean;
  Matrix covariance;
};

/// Trapezoidal mean and centered covariance of a normalized grid density.
PosteriorMoments posterior_moments(const GridDensity& density);

/// Trapezoidal integral of the grid values.
double trapezoid_integral(const GridDensity& density);

/// CSV with header q1[,q2],density; one row per grid node, shortest round-trip numbers.
void write_density_csv(const GridDensity& density, std::ostream& out);

}  // namespace condexp
