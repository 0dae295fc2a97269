#include "condexp/filters.hpp"

#include "condexp/errors.hpp"
#include "condexp/format.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace condexp {

void Ensemble::validate() const {
  const auto n = weights.size();
  if (n == 0) throw PreconditionError("ensemble is empty");
  if (xi.rows() != n || theta.rows() != n || q.rows() != n || z.rows() != n) {
    throw DimensionError("ensemble arrays do not share the sample count");
  }
  if ((weights.array() <= 0.0).any() || !weights.allFinite()) {
    throw PreconditionError("ensemble weights must be positive");
  }
  if (std::abs(pairwise_sum({weights.data(), static_cast<std::size_t>(n)}) - 1.0) > 1e-12) {
    throw PreconditionError("ensemble weights must sum to one");
  }
}

Ensemble build_ensemble(const InverseProblem& problem, const QuadratureRule& xi_rule,
                        const QuadratureRule& theta_rule) {
  if (xi_rule.dim() != problem.germ_dim()) {
    throw DimensionError("build_ensemble: xi rule dimension " + std::to_string(xi_rule.dim()) +
                         " differs from germ dimension " + std::to_string(problem.germ_dim()));
  }
  const std::size_t error_germ = error_dim(problem.error());
  if (theta_rule.dim() != error_germ) {
    throw DimensionError("build_ensemble: theta rule dimension " + std::to_string(theta_rule.dim()) +
                         " differs from error germ dimension " + std::to_string(error_germ));
  }
  const std::size_t nx = xi_rule.size();
  const std::size_t nt = theta_rule.size();
  std::vector<Vector> q(nx);
  std::vector<Vector> y(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    q[i] = problem.parameter(xi_rule.node(i));
    y[i] = evaluate(problem.forward(), q[i]);
  }
  std::vector<Vector> e(nt);
  for (std::size_t j = 0; j < nt; ++j) e[j] = evaluate(problem.error(), theta_rule.node(j));

  // Samples whose product weight underflows carry no mass and are left out.
  std::vector<std::pair<std::size_t, std::size_t>> keep;
  keep.reserve(nx * nt);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      const double lw = xi_rule.log_weights()(static_cast<Eigen::Index>(i)) +
                        theta_rule.log_weights()(static_cast<Eigen::Index>(j));
      if (std::exp(lw) > 0.0) keep.emplace_back(i, j);
    }
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  Ensemble out;
  out.xi.resize(n, static_cast<Eigen::Index>(xi_rule.dim()));
  out.theta.resize(n, static_cast<Eigen::Index>(theta_rule.dim()));
  out.weights.resize(n);
  out.q.resize(n, static_cast<Eigen::Index>(problem.parameter_dim()));
  out.z.resize(n, static_cast<Eigen::Index>(problem.measurement_dim()));
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto [i, j] = keep[static_cast<std::size_t>(s)];
    out.xi.row(s) = xi_rule.nodes().row(static_cast<Eigen::Index>(i));
    out.theta.row(s) = theta_rule.nodes().row(static_cast<Eigen::Index>(j));
    out.weights(s) = std::exp(xi_rule.log_weights()(static_cast<Eigen::Index>(i)) +
                              theta_rule.log_weights()(static_cast<Eigen::Index>(j)));
    out.q.row(s) = q[i].transpose();
    out.z.row(s) = (y[i] + e[j]).transpose();
  }
  out.weights /= pairwise_sum({out.weights.data(), static_cast<std::size_t>(n)});
  return out;
}

Vector weighted_mean(const Matrix& samples, const Vector& weights) {
  if (samples.rows() != weights.size()) throw DimensionError("weighted_mean: sample count mismatch");
  Vector m(samples.cols());
  for (Eigen::Index a = 0; a < samples.cols(); ++a) {
    m(a) = pairwise_sum(0, static_cast<std::size_t>(weights.size()), [&](std::size_t i) {
      const auto r = static_cast<Eigen::Index>(i);
      return weights(r) * samples(r, a);
    });
  }
  return m;
}

Matrix weighted_cross_covariance(const Matrix& a, const Matrix& b, const Vector& weights) {
  if (a.rows() != weights.size() || b.rows() != weights.size()) {
    throw DimensionError("weighted_cross_covariance: sample count mismatch");
  }
  const Vector ma = weighted_mean(a, weights);
  const Vector mb = weighted_mean(b, weights);
  Matrix c(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      c(i, j) = pairwise_sum(0, static_cast<std::size_t>(weights.size()), [&](std::size_t s) {
        const auto r = static_cast<Eigen::Index>(s);
        return weights(r) * (a(r, i) - ma(i)) * (b(r, j) - mb(j));
      });
    }
  }
  return c;
}

Matrix kalman_gain(const Ensemble& ensemble) {
  ensemble.validate();
  const Matrix c_qz = weighted_cross_covariance(ensemble.q, ensemble.z, ensemble.weights);
  const Matrix c_zz = symmetrized(weighted_cross_covariance(ensemble.z, ensemble.z, ensemble.weights));
  return c_qz * pseudo_inverse(c_zz, 1e-12);
}

std::vector<std::vector<int>> total_degree_indices(std::size_t dim, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> current(dim, 0);
  // Enumerate compositions of each total degree t into `dim` parts.
  for (int t = 0; t <= degree; ++t) {
    std::function<void(std::size_t, int)> fill = [&](std::size_t d, int remaining) {
      if (d + 1 == dim) {
        current[d] = remaining;
        out.push_back(current);
        return;
      }
      for (int v = remaining; v >= 0; --v) {
        current[d] = v;
        fill(d + 1, remaining - v);
      }
    };
    if (dim == 0) {
      out.emplace_back();
      break;
    }
    fill(0, t);
  }
  return out;
}

namespace {

// Basis values for standardized inputs, one row per sample.
Matrix design_matrix(const Matrix& s, const std::vector<std::vector<int>>& basis, int degree) {
  const auto n = s.rows();
  const auto d = s.cols();
  std::vector<Matrix> powers(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    Matrix& p = powers[static_cast<std::size_t>(k)];
    p.resize(n, degree + 1);
    p.col(0).setOnes();
    for (int e = 1; e <= degree; ++e) p.col(e) = p.col(e - 1).cwiseProduct(s.col(k));
  }
  Matrix phi(n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t b = 0; b < basis.size(); ++b) {
    Vector col = Vector::Ones(n);
    for (Eigen::Index k = 0; k < d; ++k) {
      const int e = basis[b][static_cast<std::size_t>(k)];
      if (e > 0) col = col.cwiseProduct(powers[static_cast<std::size_t>(k)].col(e));
    }
    phi.col(static_cast<Eigen::Index>(b)) = col;
  }
  return phi;
}

Matrix standardize(const PolynomialCeMap& map, const Matrix& z) {
  if (static_cast<std::size_t>(z.cols()) != map.input_dim()) {
    throw DimensionError("polynomial CE map: input has dimension " + std::to_string(z.cols()) +
                         ", expected " + std::to_string(map.input_dim()));
  }
  Matrix s = z.rowwise() - map.shift.transpose();
  s.array().rowwise() /= map.scale.transpose().array();
  return s;
}

}  // namespace

PolynomialCeMap fit_polynomial_regression(const Matrix& z, const Matrix& targets,
                                          const Vector& weights, int degree) {
  if (degree < 0 || degree > kMaxPolynomialDegree) {
    throw PreconditionError("polynomial degree must lie in [0, " +
                            std::to_string(kMaxPolynomialDegree) + "]");
  }
  if (z.rows() != weights.size() || targets.rows() != weights.size()) {
    throw DimensionError("fit_polynomial_regression: sample count mismatch");
  }
  PolynomialCeMap map;
  map.degree = degree;
  map.basis = total_degree_indices(static_cast<std::size_t>(z.cols()), degree);
  const auto basis_size = static_cast<Eigen::Index>(map.basis.size());
  const auto effective = (weights.array() > 0.0).count();
  if (effective < basis_size) {
    throw UnderdeterminedFitError("polynomial fit of degree " + std::to_string(degree) + " needs " +
                                  std::to_string(basis_size) + " samples, ensemble has " +
                                  std::to_string(effective));
  }
  map.shift = weighted_mean(z, weights);
  map.scale.resize(z.cols());
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const double var = pairwise_sum(0, static_cast<std::size_t>(weights.size()), [&](std::size_t i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double dz = z(r, k) - map.shift(k);
      return weights(r) * dz * dz;
    });
    map.scale(k) = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  const Vector root_w = weights.cwiseSqrt();
  Matrix a = design_matrix(standardize(map, z), map.basis, degree);
  a = root_w.asDiagonal() * a;
  Vector column_scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < column_scale.size(); ++j) {
    if (!(column_scale(j) > 0.0)) column_scale(j) = 1.0;
  }
  a = a * column_scale.cwiseInverse().asDiagonal();
  const Matrix b = root_w.asDiagonal() * targets;

  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-12);
  const Matrix solution = qr.solve(b);  // basis x outputs, zero on dropped columns
  map.rank = static_cast<std::size_t>(qr.rank());
  const auto r_diag = qr.matrixR().diagonal().cwiseAbs();
  const double smallest = map.rank > 0 ? r_diag(static_cast<Eigen::Index>(map.rank) - 1) : 0.0;
  map.condition_estimate = smallest > 0.0 ? r_diag(0) / smallest : std::numeric_limits<double>::infinity();
  map.ill_conditioned =
      map.condition_estimate > kConditionWarning || map.rank < static_cast<std::size_t>(basis_size);

  map.coefficients = (column_scale.cwiseInverse().asDiagonal() * solution).transpose();
  const Matrix fitted = a * solution;
  map.residual = std::sqrt((b - fitted).squaredNorm());
  return map;
}

PolynomialCeMap fit_polynomial_ce(const Ensemble& ensemble, int degree) {
  ensemble.validate();
  return fit_polynomial_regression(ensemble.z, ensemble.q, ensemble.weights, degree);
}

Matrix evaluate_ce_map_rows(const PolynomialCeMap& map, const Matrix& z) {
  const Matrix phi = design_matrix(standardize(map, z), map.basis, map.degree);
  return phi * map.coefficients.transpose();
}

Vector evaluate_ce_map(const PolynomialCeMap& map, const Vector& y) {
  return evaluate_ce_map_rows(map, y.transpose()).row(0).transpose();
}

Ensemble apply_filter(const Ensemble& ensemble, const PolynomialCeMap& map, const Vector& y_hat) {
  ensemble.validate();
  if (map.output_dim() != static_cast<std::size_t>(ensemble.q.cols())) {
    throw DimensionError("apply_filter: map output dimension differs from parameter dimension");
  }
  Ensemble out = ensemble;
  const Matrix at_samples = evaluate_ce_map_rows(map, ensemble.z);
  const Vector at_obs = evaluate_ce_map(map, y_hat);
  out.q = (ensemble.q - at_samples).rowwise() + at_obs.transpose();
  return out;
}

Ensemble covariance_corrected_filter(const Ensemble& ensemble, const PolynomialCeMap& map,
                                     const Vector& y_hat, const Matrix& target_cov) {
  ensemble.validate();
  const auto d = ensemble.q.cols();
  if (target_cov.rows() != d || target_cov.cols() != d) {
    throw DimensionError("covariance_corrected_filter: target covariance has wrong shape");
  }
  if (!target_cov.allFinite()) throw InvalidTargetError("target covariance has non-finite entries");
  const double scale = std::max(1.0, target_cov.cwiseAbs().maxCoeff());
  if ((target_cov - target_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidTargetError("target covariance is not symmetric");
  }
  const Vector lambda = symmetric_eigen(symmetrized(target_cov)).values;
  if (lambda(0) < -1e-12 * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300)) {
    throw InvalidTargetError("target covariance is not positive semi-definite (min eigenvalue " +
                             format_number(lambda(0)) + ")");
  }
  const Matrix residual = ensemble.q - evaluate_ce_map_rows(map, ensemble.z);
  const Matrix c_rr = symmetrized(weighted_cross_covariance(residual, residual, ensemble.weights));
  const Matrix scaling = symmetric_sqrt(target_cov) * symmetric_inverse_sqrt(c_rr);
  const Vector at_obs = evaluate_ce_map(map, y_hat);
  Ensemble out = ensemble;
  out.q = (residual * scaling.transpose()).rowwise() + at_obs.transpose();
  return out;
}

Matrix polynomial_conditional_covariance(const Ensemble& ensemble, int degree, const Vector& y) {
  const PolynomialCeMap mean_map = fit_polynomial_ce(ensemble, degree);
  const Vector center = evaluate_ce_map(mean_map, y);
  const auto d = ensemble.q.cols();
  const Matrix centered = ensemble.q.rowwise() - center.transpose();
  Matrix products(ensemble.q.rows(), d * (d + 1) / 2);
  Eigen::Index col = 0;
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) products.col(col++) = centered.col(a).cwiseProduct(centered.col(b));
  }
  const PolynomialCeMap second = fit_polynomial_regression(ensemble.z, products, ensemble.weights, degree);
  const Vector value = evaluate_ce_map(second, y);
  Matrix c(d, d);
  col = 0;
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      c(a, b) = value(col);
      c(b, a) = value(col);
      ++col;
    }
  }
  return c;
}

Ensemble cde_mean_filter(const Ensemble& ensemble, const PosteriorEngine& engine, const Vector& y_hat) {
  ensemble.validate();
  const Vector at_obs = engine.mean(y_hat);
  Ensemble out = ensemble;
  for (Eigen::Index i = 0; i < ensemble.z.rows(); ++i) {
    const Vector at_sample = engine.mean(ensemble.z.row(i).transpose());
    out.q.row(i) = ensemble.q.row(i) - at_sample.transpose() + at_obs.transpose();
  }
  return out;
}

void write_ensemble_csv(const Ensemble& ensemble, std::ostream& out) {
  ensemble.validate();
  out << "weight";
  auto header = [&](const char* prefix, Eigen::Index count) {
    for (Eigen::Index k = 0; k < count; ++k) out << ',' << prefix << (k + 1);
  };
  header("xi", ensemble.xi.cols());
  header("theta", ensemble.theta.cols());
  header("q", ensemble.q.cols());
  header("z", ensemble.z.cols());
  out << '\n';
  for (Eigen::Index i = 0; i < ensemble.weights.size(); ++i) {
    out << format_number(ensemble.weights(i));
    for (const Matrix* m : {&ensemble.xi, &ensemble.theta, &ensemble.q, &ensemble.z}) {
      for (Eigen::Index k = 0; k < m->cols(); ++k) out << ',' << format_number((*m)(i, k));
    }
    out << '\n';
  }
}

Ensemble read_ensemble_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("ensemble CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> columns;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) columns.push_back(cell);
  }
  if (columns.empty() || columns[0] != "weight") throw ParseError("ensemble CSV: first column must be 'weight'");
  const std::vector<std::string> prefixes{"xi", "theta", "q", "z"};
  std::vector<Eigen::Index> counts(prefixes.size(), 0);
  std::size_t pos = 1;
  for (std::size_t p = 0; p < prefixes.size(); ++p) {
    while (pos < columns.size() &&
           columns[pos] == prefixes[p] + std::to_string(counts[p] + 1)) {
      ++counts[p];
      ++pos;
    }
  }
  if (pos != columns.size()) throw ParseError("ensemble CSV: unexpected column '" + columns[pos] + "'");
  if (counts[2] == 0 || counts[3] == 0) throw ParseError("ensemble CSV: needs q and z columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(parse_number(cell));
      } catch (const ParseError& e) {
        throw ParseError("ensemble CSV line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (row.size() != columns.size()) {
      throw ParseError("ensemble CSV line " + std::to_string(line_no) + ": expected " +
                       std::to_string(columns.size()) + " fields");
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Ensemble e;
  e.weights.resize(n);
  e.xi.resize(n, counts[0]);
  e.theta.resize(n, counts[1]);
  e.q.resize(n, counts[2]);
  e.z.resize(n, counts[3]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    e.weights(i) = r[0];
    std::size_t c = 1;
    for (Matrix* m : {&e.xi, &e.theta, &e.q, &e.z}) {
      for (Eigen::Index k = 0; k < m->cols(); ++k) (*m)(i, k) = r[c++];
    }
  }
  e.validate();
  return e;
}

}  // namespace condexp
