#include "condexp/oracle.hpp"

#include "condexp/errors.hpp"
#include "condexp/format.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace condexp {

namespace {

std::vector<double> trapezoid_weights(const Vector& axis) {
  const auto n = static_cast<std::size_t>(axis.size());
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = axis(static_cast<Eigen::Index>(i + 1)) - axis(static_cast<Eigen::Index>(i));
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

// Flat index -> per-axis indices, last axis fastest.
void unflatten(std::size_t flat, const std::vector<Vector>& axes, std::vector<std::size_t>& idx) {
  for (std::size_t d = axes.size(); d-- > 0;) {
    const auto n = static_cast<std::size_t>(axes[d].size());
    idx[d] = flat % n;
    flat /= n;
  }
}

std::size_t grid_size(const std::vector<Vector>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= static_cast<std::size_t>(a.size());
  return n;
}

// Trapezoid weight and coordinates of every grid node.
struct GridNodes {
  std::vector<double> weight;
  Matrix points;  // one row per node
};

GridNodes grid_nodes(const std::vector<Vector>& axes) {
  const std::size_t n = grid_size(axes);
  std::vector<std::vector<double>> tw;
  for (const auto& a : axes) tw.push_back(trapezoid_weights(a));
  GridNodes g;
  g.weight.resize(n);
  g.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(axes.size()));
  std::vector<std::size_t> idx(axes.size());
  for (std::size_t flat = 0; flat < n; ++flat) {
    unflatten(flat, axes, idx);
    double w = 1.0;
    for (std::size_t d = 0; d < axes.size(); ++d) {
      w *= tw[d][idx[d]];
      g.points(static_cast<Eigen::Index>(flat), static_cast<Eigen::Index>(d)) =
          axes[d](static_cast<Eigen::Index>(idx[d]));
    }
    g.weight[flat] = w;
  }
  return g;
}

}  // namespace

double likelihood(const InverseProblem& problem, const Vector& q, const Vector& y_hat) {
  const Vector y = evaluate(problem.forward(), q);
  if (y.size() != y_hat.size()) throw DimensionError("likelihood: observation dimension mismatch");
  return std::exp(error_log_density(problem.error(), y_hat - y));
}

double prior_log_density(const Prior& prior, const Vector& q) {
  if (const auto* g = std::get_if<GaussianSpec>(&prior)) return gaussian_log_pdf(*g, q);
  const auto& pce = std::get<PceExpansion>(prior);
  if (pce.germ_dim() != 1 || pce.output_dim() != 1) {
    throw UnsupportedPriorError("prior density is available only for Gaussian or one-dimensional PCE priors");
  }
  if (q.size() != 1) throw DimensionError("prior_log_density: expected a scalar parameter");
  int max_degree = 0;
  for (const auto& alpha : pce.multi_indices()) max_degree = std::max(max_degree, alpha[0]);
  std::vector<double> hermite(static_cast<std::size_t>(max_degree) + 1, 0.0);
  for (std::size_t k = 0; k < pce.num_terms(); ++k) {
    hermite[pce.multi_indices()[k][0]] = pce.coefficients()(0, static_cast<Eigen::Index>(k));
  }
  const ScalarPolynomial poly = ScalarPolynomial::from_hermite(hermite);
  if (poly.degree() < 1) throw UnsupportedPriorError("constant PCE prior has no density");
  return log_density_of_polynomial_rv(poly, q(0));
}

std::vector<GridAxis> default_grid(const InverseProblem& problem) {
  const std::size_t d = problem.parameter_dim();
  if (d > kMaxOracleDim) {
    throw PreconditionError("density oracle supports at most " + std::to_string(kMaxOracleDim) +
                            " parameters; use the conditioned-expectation engine");
  }
  Vector mean;
  Matrix cov;
  if (const auto* g = std::get_if<GaussianSpec>(&problem.prior())) {
    mean = g->mean();
    cov = g->covariance();
  } else {
    const auto& pce = std::get<PceExpansion>(problem.prior());
    mean = pce.mean();
    cov = pce.covariance();
  }
  const std::size_t points = d == 1 ? 4001 : 801;
  std::vector<GridAxis> axes;
  for (std::size_t i = 0; i < d; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double sd = std::sqrt(std::max(cov(ii, ii), 0.0));
    if (!(sd > 0.0)) throw UnsupportedPriorError("prior has zero variance; no density grid");
    axes.push_back({mean(ii) - 8.0 * sd, mean(ii) + 8.0 * sd, points});
  }
  return axes;
}

GridDensity posterior_density(const InverseProblem& problem, const std::vector<GridAxis>& grid,
                              const Vector& y_hat) {
  if (grid.size() != problem.parameter_dim()) {
    throw DimensionError("posterior_density: grid has " + std::to_string(grid.size()) +
                         " axes, parameter dimension is " + std::to_string(problem.parameter_dim()));
  }
  if (grid.size() > kMaxOracleDim) {
    throw PreconditionError("density oracle supports at most two parameters");
  }
  if (static_cast<std::size_t>(y_hat.size()) != problem.measurement_dim()) {
    throw DimensionError("posterior_density: observation dimension mismatch");
  }
  GridDensity out;
  for (const auto& a : grid) {
    if (a.points < 2 || !(a.upper > a.lower)) {
      throw PreconditionError("posterior_density: each axis needs >= 2 points and upper > lower");
    }
    const std::vector<double> v = linspace(a.lower, a.upper, a.points);
    out.axes.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  const GridNodes nodes = grid_nodes(out.axes);
  const std::size_t n = nodes.weight.size();
  std::vector<double> log_f(n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector q = nodes.points.row(static_cast<Eigen::Index>(i)).transpose();
    const double lp = prior_log_density(problem.prior(), q);
    log_f[i] = lp == -std::numeric_limits<double>::infinity()
                   ? lp
                   : lp + error_log_density(problem.error(), y_hat - evaluate(problem.forward(), q));
    peak = std::max(peak, log_f[i]);
  }
  if (!std::isfinite(peak)) {
    throw VanishingEvidenceError("posterior_density: likelihood vanishes on the whole grid",
                                 -std::numeric_limits<double>::infinity());
  }
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = std::exp(log_f[i] - peak);
  const double mass = pairwise_sum(0, n, [&](std::size_t i) { return nodes.weight[i] * out.values[i]; });
  out.log_evidence = peak + std::log(mass);
  if (!(out.log_evidence >= -745.0)) {
    throw VanishingEvidenceError("posterior_density: evidence below representable range",
                                 out.log_evidence);
  }
  for (double& v : out.values) v /= mass;
  return out;
}

double trapezoid_integral(const GridDensity& density) {
  const GridNodes nodes = grid_nodes(density.axes);
  return pairwise_sum(0, nodes.weight.size(),
                      [&](std::size_t i) { return nodes.weight[i] * density.values[i]; });
}

PosteriorMoments posterior_moments(const GridDensity& density) {
  const GridNodes nodes = grid_nodes(density.axes);
  const std::size_t n = nodes.weight.size();
  if (density.values.size() != n) throw DimensionError("posterior_moments: value count mismatch");
  const auto d = static_cast<Eigen::Index>(density.dim());
  const double mass = pairwise_sum(0, n, [&](std::size_t i) { return nodes.weight[i] * density.values[i]; });
  PosteriorMoments m;
  m.mean.resize(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    m.mean(a) = pairwise_sum(0, n, [&](std::size_t i) {
                  return nodes.weight[i] * density.values[i] * nodes.points(static_cast<Eigen::Index>(i), a);
                }) /
                mass;
  }
  m.covariance.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      m.covariance(a, b) = pairwise_sum(0, n, [&](std::size_t i) {
                             const auto r = static_cast<Eigen::Index>(i);
                             return nodes.weight[i] * density.values[i] *
                                    (nodes.points(r, a) - m.mean(a)) * (nodes.points(r, b) - m.mean(b));
                           }) /
                           mass;
      m.covariance(b, a) = m.covariance(a, b);
    }
  }
  return m;
}

void write_density_csv(const GridDensity& density, std::ostream& out) {
  for (std::size_t d = 0; d < density.dim(); ++d) out << 'q' << (d + 1) << ',';
  out << "density\n";
  std::vector<std::size_t> idx(density.dim());
  for (std::size_t flat = 0; flat < density.values.size(); ++flat) {
    unflatten(flat, density.axes, idx);
    for (std::size_t d = 0; d < density.dim(); ++d) {
      out << format_number(density.axes[d](static_cast<Eigen::Index>(idx[d]))) << ',';
    }
    out << format_number(density.values[flat]) << '\n';
  }
}

}  // namespace condexp
