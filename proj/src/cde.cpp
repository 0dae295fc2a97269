#include "condexp/cde.hpp"

#include "condexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace condexp {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> error_log_density_rows(const ErrorModel& error, const Matrix& residuals) {
  const auto n = static_cast<std::size_t>(residuals.rows());
  std::vector<double> out(n);
  if (const auto* g = std::get_if<GaussianSpec>(&error)) {
    if (static_cast<std::size_t>(residuals.cols()) != g->dim()) {
      throw DimensionError("error density: residual dimension mismatch");
    }
    Matrix centered = residuals.transpose();
    centered.colwise() -= g->mean();
    g->cholesky_factor().triangularView<Eigen::Lower>().solveInPlace(centered);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = g->log_normalizer() - 0.5 * centered.col(static_cast<Eigen::Index>(i)).squaredNorm();
    }
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = error_log_density(error, residuals.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return out;
}

PosteriorEngine::PosteriorEngine(InverseProblem problem, QuadratureRule rule, EngineOptions options)
    : problem_(std::move(problem)), rule_(std::move(rule)), options_(options) {
  if (rule_.dim() != problem_.germ_dim()) {
    throw DimensionError("PosteriorEngine: rule dimension " + std::to_string(rule_.dim()) +
                         " differs from prior germ dimension " + std::to_string(problem_.germ_dim()));
  }
  const auto n = static_cast<Eigen::Index>(rule_.size());
  parameters_.resize(n, static_cast<Eigen::Index>(problem_.parameter_dim()));
  observations_.resize(n, static_cast<Eigen::Index>(problem_.measurement_dim()));
  parallel_for(rule_.size(), options_.threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector q = problem_.parameter(rule_.node(i));
    parameters_.row(row) = q.transpose();
    observations_.row(row) = evaluate(problem_.forward(), q).transpose();
  });
}

std::vector<double> PosteriorEngine::log_likelihoods(const Vector& y_hat) const {
  if (static_cast<std::size_t>(y_hat.size()) != problem_.measurement_dim()) {
    throw DimensionError("observation has dimension " + std::to_string(y_hat.size()) +
                         ", expected " + std::to_string(problem_.measurement_dim()));
  }
  Matrix residuals = (-observations_).rowwise() + y_hat.transpose();
  return error_log_density_rows(problem_.error(), residuals);
}

double PosteriorEngine::log_evidence(const Vector& y_hat) const {
  std::vector<double> lw = log_likelihoods(y_hat);
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] += rule_.log_weights()(static_cast<Eigen::Index>(i));
  return log_sum_exp(lw);
}

PosteriorEngine::Weighting PosteriorEngine::weigh(const Vector& y_hat) const {
  const std::vector<double> lf = log_likelihoods(y_hat);
  const std::size_t n = lf.size();
  std::vector<double> lw(n);
  std::vector<double> lw2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_w = rule_.log_weights()(static_cast<Eigen::Index>(i));
    lw[i] = log_w + lf[i];
    lw2[i] = log_w + 2.0 * lf[i];
  }
  Weighting out;
  out.log_evidence = log_sum_exp(lw);
  if (!(out.log_evidence >= kVanishingLogEvidence)) {
    const double reported =
        std::isnan(out.log_evidence) ? -std::numeric_limits<double>::infinity() : out.log_evidence;
    throw VanishingEvidenceError("vanishing evidence: log denominator " + std::to_string(reported) +
                                     " below representable range",
                                 reported);
  }
  out.normalized.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.normalized[i] = std::exp(lw[i] - out.log_evidence);
  // Renormalize so the weights sum to one to the last bit the pairwise sum allows.
  const double total = pairwise_sum(out.normalized);
  for (double& p : out.normalized) p /= total;
  // (E f)^2 / E f^2 under the rule's prior weights; reduces to
  // (sum f)^2 / (n sum f^2) for equal-weight Monte Carlo rules.
  const double ratio = std::exp(2.0 * out.log_evidence - log_sum_exp(lw2));
  out.effective_sample_fraction = std::min(1.0, ratio);
  return out;
}

Vector PosteriorEngine::weighted_mean(const std::vector<double>& p) const {
  const auto d = parameters_.cols();
  Vector m(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    m(a) = pairwise_sum(0, p.size(), [&](std::size_t i) {
      return p[i] * parameters_(static_cast<Eigen::Index>(i), a);
    });
  }
  return m;
}

Matrix PosteriorEngine::weighted_covariance(const std::vector<double>& p, const Vector& center) const {
  const auto d = parameters_.cols();
  Matrix c(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      c(a, b) = pairwise_sum(0, p.size(), [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        return p[i] * (parameters_(r, a) - center(a)) * (parameters_(r, b) - center(b));
      });
      c(b, a) = c(a, b);
    }
  }
  return c;
}

Vector PosteriorEngine::expectation_at_nodes(const std::function<Vector(std::size_t)>& value,
                                             const Vector& y_hat) const {
  const Weighting w = weigh(y_hat);
  const std::size_t n = w.normalized.size();
  std::vector<Vector> values(n);
  // Nodes whose weight underflowed contribute nothing and are not evaluated.
  parallel_for(n, options_.threads, [&](std::size_t i) {
    if (w.normalized[i] > 0.0) values[i] = value(i);
  });
  Eigen::Index dim = -1;
  for (const auto& v : values) {
    if (v.size() == 0) continue;
    if (dim < 0) dim = v.size();
    if (v.size() != dim) throw DimensionError("functional returned vectors of varying dimension");
  }
  Vector out = Vector::Zero(std::max<Eigen::Index>(dim, 0));
  for (Eigen::Index a = 0; a < out.size(); ++a) {
    out(a) = pairwise_sum(0, n, [&](std::size_t i) {
      return w.normalized[i] > 0.0 ? w.normalized[i] * values[i](a) : 0.0;
    });
  }
  return out;
}

Vector PosteriorEngine::expectation(const GermFunctional& functional, const Vector& y_hat) const {
  return expectation_at_nodes([&](std::size_t i) { return functional(rule_.node(i)); }, y_hat);
}

Vector PosteriorEngine::expectation(const JointFunctional& functional, const Vector& y_hat) const {
  if (!is_invertible(problem_.error())) {
    throw PreconditionError(
        "error-dependent functionals need an invertible error map; this error model is not one-to-one");
  }
  return expectation_at_nodes(
      [&](std::size_t i) {
        const Vector residual = y_hat - observations_.row(static_cast<Eigen::Index>(i)).transpose();
        return functional(rule_.node(i), invert(problem_.error(), residual));
      },
      y_hat);
}

Vector PosteriorEngine::mean(const Vector& y_hat) const { return weighted_mean(weigh(y_hat).normalized); }

Matrix PosteriorEngine::covariance(const Vector& y_hat) const {
  const Weighting w = weigh(y_hat);
  return weighted_covariance(w.normalized, weighted_mean(w.normalized));
}

PosteriorSummary PosteriorEngine::summarize(const Vector& y_hat) const {
  const Weighting w = weigh(y_hat);
  PosteriorSummary s;
  s.observation = y_hat;
  s.mean = weighted_mean(w.normalized);
  s.covariance = weighted_covariance(w.normalized, s.mean);
  s.log_evidence = w.log_evidence;
  s.effective_sample_fraction = w.effective_sample_fraction;
  if (s.effective_sample_fraction < kLowAccuracyFraction) s.flags |= PosteriorSummary::kLowAccuracy;
  return s;
}

std::vector<PosteriorSummary> PosteriorEngine::sweep(const std::vector<Vector>& y_values) const {
  std::vector<PosteriorSummary> out;
  out.reserve(y_values.size());
  for (const auto& y : y_values) {
    if (static_cast<std::size_t>(y.size()) != problem_.measurement_dim()) {
      throw DimensionError("sweep: observation values must share the measurement dimension");
    }
    try {
      out.push_back(summarize(y));
    } catch (const VanishingEvidenceError& e) {
      PosteriorSummary s;
      s.observation = y;
      s.log_evidence = e.log_denominator();
      s.flags = PosteriorSummary::kVanishingEvidence;
      out.push_back(std::move(s));
    }
  }
  return out;
}

Vector conditioned_expectation(const InverseProblem& problem,
                               const PosteriorEngine::GermFunctional& functional,
                               const QuadratureRule& rule, const Vector& y_hat) {
  return PosteriorEngine(problem, rule).expectation(functional, y_hat);
}

Vector conditioned_expectation(const InverseProblem& problem,
                               const PosteriorEngine::JointFunctional& functional,
                               const QuadratureRule& rule, const Vector& y_hat) {
  return PosteriorEngine(problem, rule).expectation(functional, y_hat);
}

Vector conditioned_mean(const InverseProblem& problem, const QuadratureRule& rule, const Vector& y_hat) {
  return PosteriorEngine(problem, rule).mean(y_hat);
}

Matrix conditioned_covariance(const InverseProblem& problem, const QuadratureRule& rule,
                              const Vector& y_hat) {
  return PosteriorEngine(problem, rule).covariance(y_hat);
}

PosteriorSummary summarize(const InverseProblem& problem, const QuadratureRule& rule,
                           const Vector& y_hat) {
  return PosteriorEngine(problem, rule).summarize(y_hat);
}

std::vector<PosteriorSummary> sweep(const InverseProblem& problem, const QuadratureRule& rule,
                                    const std::vector<Vector>& y_values) {
  return PosteriorEngine(problem, rule).sweep(y_values);
}

}  // namespace condexp
