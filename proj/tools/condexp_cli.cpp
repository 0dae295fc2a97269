// condexp: posterior summaries, sweeps and filter comparisons from the command line.
//
// Exit codes: 0 success, 2 configuration or parse error, 3 numerical failure
// (vanishing evidence, degenerate density), 4 I/O error. Output files are
// only written once every result has been computed.

#include "condexp/cde.hpp"
#include "condexp/errors.hpp"
#include "condexp/filters.hpp"
#include "condexp/format.hpp"
#include "condexp/oracle.hpp"
#include "condexp/problem_io.hpp"
#include "condexp/quadrature.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using condexp::Matrix;
using condexp::Vector;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct RunConfig {
  std::string problem;
  std::string method = "cde";
  std::string rule;
  int order = 0;
  std::size_t mc_samples = 100000;
  std::uint64_t seed = 0;
  std::string y;
  std::string y_range;
  std::vector<int> degrees;
  std::string out;
  std::string format = "json";
  unsigned threads = 1;
  std::size_t grid_points = 0;
  int ensemble_order = 0;
};

condexp::ParseError config_error(const std::string& flag, const std::string& message) {
  return condexp::ParseError(flag + ": " + message);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::stringstream ss(text);
  while (std::getline(ss, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

Vector parse_vector(const std::string& text, const std::string& flag) {
  const auto parts = split(text, ',');
  if (parts.empty()) throw config_error(flag, "expected comma-separated numbers");
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      v(static_cast<Eigen::Index>(i)) = condexp::parse_number(parts[i]);
    } catch (const condexp::ParseError& e) {
      throw config_error(flag, e.what());
    }
    if (!std::isfinite(v(static_cast<Eigen::Index>(i)))) throw config_error(flag, "values must be finite");
  }
  return v;
}

// Quadrature over the prior germ.
condexp::QuadratureRule make_rule(const RunConfig& cfg, std::size_t dim) {
  std::string kind = cfg.rule;
  if (kind.empty()) kind = dim <= 2 ? "legendre" : "gh";
  if (kind == "legendre") {
    if (dim > 2) throw config_error("--rule", "legendre rule is limited to germ dimension <= 2");
    const int panels = cfg.order > 0 ? cfg.order : (dim == 1 ? 200 : 100);
    const double half_width = dim == 1 ? 10.0 : 8.0;
    return condexp::gauss_legendre_normal(dim, panels, 8, half_width);
  }
  if (kind == "gh") {
    const int order = cfg.order > 0 ? cfg.order : (dim <= 2 ? 64 : 16);
    if (order > condexp::kMaxGaussHermiteOrder) {
      throw config_error("--order", "Gauss-Hermite order must be <= " +
                                        std::to_string(condexp::kMaxGaussHermiteOrder));
    }
    return condexp::gauss_hermite(dim, order);
  }
  if (kind == "mc") {
    if (cfg.mc_samples == 0) throw config_error("--mc-samples", "must be positive");
    return condexp::monte_carlo(dim, cfg.mc_samples, cfg.seed);
  }
  throw config_error("--rule", "unknown rule '" + kind + "' (legendre, gh, mc)");
}

condexp::Ensemble make_ensemble(const RunConfig& cfg, const condexp::InverseProblem& problem) {
  const std::size_t dx = problem.germ_dim();
  const std::size_t dt = condexp::error_dim(problem.error());
  int order = cfg.ensemble_order;
  if (order <= 0) order = dx + dt <= 3 ? 64 : 8;
  return condexp::build_ensemble(problem, condexp::gauss_hermite(dx, order), condexp::gauss_hermite(dt, order));
}

Vector observation(const RunConfig& cfg, const condexp::InverseProblem& problem) {
  Vector y;
  if (!cfg.y.empty()) {
    y = parse_vector(cfg.y, "--y");
  } else if (problem.observed()) {
    y = *problem.observed();
  } else {
    throw config_error("--y", "problem has no observed value; pass --y");
  }
  if (static_cast<std::size_t>(y.size()) != problem.measurement_dim()) {
    throw config_error("--y", "expected " + std::to_string(problem.measurement_dim()) + " components, got " +
                                  std::to_string(y.size()));
  }
  return y;
}

std::vector<double> sweep_points(const RunConfig& cfg) {
  const auto parts = split(cfg.y_range, ':');
  if (parts.size() != 3) throw config_error("--y-range", "expected start:stop:count");
  double start = 0.0;
  double stop = 0.0;
  try {
    start = condexp::parse_number(parts[0]);
    stop = condexp::parse_number(parts[1]);
  } catch (const condexp::ParseError& e) {
    throw config_error("--y-range", e.what());
  }
  long long count = 0;
  std::istringstream is(parts[2]);
  if (!(is >> count) || !(is >> std::ws).eof() || count < 1) {
    throw config_error("--y-range", "count must be an integer >= 1");
  }
  if (count == 1) return {start};
  return condexp::linspace(start, stop, static_cast<std::size_t>(count));
}

std::vector<condexp::GridAxis> oracle_grid(const RunConfig& cfg, const condexp::InverseProblem& problem) {
  auto grid = condexp::default_grid(problem);
  if (cfg.grid_points > 0) {
    if (cfg.grid_points < 2) throw config_error("--grid-points", "must be >= 2");
    for (auto& axis : grid) axis.points = cfg.grid_points;
  }
  return grid;
}

void check_degrees(const std::vector<int>& degrees) {
  for (int k : degrees) {
    if (k < 0 || k > condexp::kMaxPolynomialDegree) {
      throw config_error("--degree", "degrees must lie in [0, " + std::to_string(condexp::kMaxPolynomialDegree) + "]");
    }
  }
}

ordered_json to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json to_json(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

ordered_json eigen_json(const Matrix& cov) {
  const auto eig = condexp::symmetric_eigen(cov);
  return ordered_json{{"eigenvalues", to_json(eig.values)}, {"eigenvectors", to_json(Matrix(eig.vectors.transpose()))}};
}

Vector abs_delta(const Vector& a, const Vector& b) { return (a - b).cwiseAbs(); }

std::string join_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

// One summary record: observation, mean, row-major covariance, evidence,
// sample fraction and covariance eigenvalues.
struct Record {
  Vector observation;
  Vector mean;
  Matrix covariance;
  double log_evidence = 0.0;
  std::optional<double> ess;
  unsigned flags = 0;
};

std::string record_output(const Record& r, const std::string& method, const std::string& format) {
  const Vector eig = condexp::symmetric_eigen(r.covariance).values;
  if (format == "json") {
    ordered_json j;
    j["schema"] = 1;
    j["method"] = method;
    j["observation"] = to_json(r.observation);
    j["mean"] = to_json(r.mean);
    j["covariance"] = to_json(r.covariance);
    j["log_evidence"] = r.log_evidence;
    j["effective_sample_fraction"] = r.ess ? ordered_json(*r.ess) : ordered_json(nullptr);
    j["flags"] = r.flags;
    j["eigenvalues"] = to_json(eig);
    return j.dump(2) + "\n";
  }
  std::vector<std::string> header;
  std::vector<std::string> row;
  for (Eigen::Index i = 0; i < r.observation.size(); ++i) {
    header.push_back("y" + std::to_string(i + 1));
    row.push_back(condexp::format_number(r.observation(i)));
  }
  for (Eigen::Index i = 0; i < r.mean.size(); ++i) {
    header.push_back("mean" + std::to_string(i + 1));
    row.push_back(condexp::format_number(r.mean(i)));
  }
  for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
    for (Eigen::Index k = 0; k < r.covariance.cols(); ++k) {
      header.push_back("cov" + std::to_string(i + 1) + std::to_string(k + 1));
      row.push_back(condexp::format_number(r.covariance(i, k)));
    }
  }
  header.push_back("log_evidence");
  row.push_back(condexp::format_number(r.log_evidence));
  header.push_back("ess");
  row.push_back(r.ess ? condexp::format_number(*r.ess) : std::string());
  header.push_back("flags");
  row.push_back(std::to_string(r.flags));
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    header.push_back("eig" + std::to_string(i + 1));
    row.push_back(condexp::format_number(eig(i)));
  }
  return join_csv(header) + join_csv(row);
}

Record oracle_record(const RunConfig& cfg, const condexp::InverseProblem& problem, const Vector& y) {
  const auto density = condexp::posterior_density(problem, oracle_grid(cfg, problem), y);
  const auto m = condexp::posterior_moments(density);
  return Record{y, m.mean, m.covariance, density.log_evidence, std::nullopt, 0};
}

std::string cmd_summarize(const RunConfig& cfg) {
  const auto problem = condexp::resolve_problem(cfg.problem);
  const Vector y = observation(cfg, problem);
  if (cfg.method == "oracle") return record_output(oracle_record(cfg, problem, y), "oracle", cfg.format);
  if (cfg.method != "cde") throw config_error("--method", "summarize supports cde or oracle");
  const condexp::PosteriorEngine engine(problem, make_rule(cfg, problem.germ_dim()), {cfg.threads});
  const auto s = engine.summarize(y);
  return record_output(Record{s.observation, s.mean, s.covariance, s.log_evidence, s.effective_sample_fraction, s.flags},
                       "cde", cfg.format);
}

std::string cmd_sweep(const RunConfig& cfg) {
  const auto problem = condexp::resolve_problem(cfg.problem);
  if (problem.measurement_dim() != 1) throw config_error("--y-range", "sweeps need a scalar measurement");
  if (cfg.format != "csv") throw config_error("--format", "sweep writes csv");
  std::vector<double> ys;
  if (!cfg.y_range.empty()) {
    ys = sweep_points(cfg);
  } else {
    const Vector y = observation(cfg, problem);
    ys = {y(0)};
  }
  std::vector<std::string> methods = split(cfg.method, ',');
  bool want_cde = false;
  bool want_oracle = false;
  bool want_kalman = false;
  bool want_poly = false;
  for (const auto& m : methods) {
    if (m == "cde") want_cde = true;
    else if (m == "oracle") want_oracle = true;
    else if (m == "kalman") want_kalman = true;
    else if (m == "poly-ce") want_poly = true;
    else throw config_error("--method", "unknown method '" + m + "'");
  }
  std::vector<int> degrees = cfg.degrees.empty() ? std::vector<int>{1, 5, 15} : cfg.degrees;
  check_degrees(degrees);

  const std::size_t d = problem.parameter_dim();
  std::vector<std::string> header{"y"};
  auto add_columns = [&](const std::string& prefix) {
    for (std::size_t i = 0; i < d; ++i) header.push_back(prefix + "_mean" + std::to_string(i + 1));
    for (std::size_t i = 0; i < d; ++i) header.push_back(prefix + "_var" + std::to_string(i + 1));
  };
  if (want_cde) add_columns("cde");
  if (want_oracle) add_columns("oracle");
  if (want_kalman) add_columns("kalman");
  if (want_poly) {
    for (int k : degrees) add_columns("poly" + std::to_string(k));
  }
  header.insert(header.end(), {"log_evidence", "ess", "flags"});

  std::vector<Vector> points;
  for (double v : ys) points.push_back(Vector::Constant(1, v));
  const condexp::PosteriorEngine engine(problem, make_rule(cfg, problem.germ_dim()), {cfg.threads});
  const auto summaries = engine.sweep(points);

  std::optional<condexp::Ensemble> ensemble;
  std::vector<condexp::PolynomialCeMap> maps;
  if (want_kalman || want_poly) {
    ensemble = make_ensemble(cfg, problem);
    if (want_kalman) maps.push_back(condexp::fit_polynomial_ce(*ensemble, 1));
    if (want_poly) {
      for (int k : degrees) maps.push_back(condexp::fit_polynomial_ce(*ensemble, k));
    }
  }
  Matrix kalman_residual_cov;
  if (want_kalman) {
    const Matrix residual = ensemble->q - condexp::evaluate_ce_map_rows(maps.front(), ensemble->z);
    kalman_residual_cov = condexp::weighted_cross_covariance(residual, residual, ensemble->weights);
  }
  const std::vector<condexp::GridAxis> grid =
      want_oracle ? oracle_grid(cfg, problem) : std::vector<condexp::GridAxis>{};

  std::string text = join_csv(header);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& s = summaries[p];
    std::vector<std::string> row{condexp::format_number(ys[p])};
    auto add_moments = [&](const Vector* mean, const Matrix* cov) {
      for (std::size_t i = 0; i < d; ++i) {
        row.push_back(mean ? condexp::format_number((*mean)(static_cast<Eigen::Index>(i))) : std::string());
      }
      for (std::size_t i = 0; i < d; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        row.push_back(cov ? condexp::format_number((*cov)(ii, ii)) : std::string());
      }
    };
    if (want_cde) {
      if (s.has_moments()) add_moments(&s.mean, &s.covariance);
      else add_moments(nullptr, nullptr);
    }
    if (want_oracle) {
      try {
        const auto m = condexp::posterior_moments(condexp::posterior_density(problem, grid, points[p]));
        add_moments(&m.mean, &m.covariance);
      } catch (const condexp::VanishingEvidenceError&) {
        add_moments(nullptr, nullptr);
      }
    }
    std::size_t next = 0;
    auto add_map = [&](int degree) {
      const Vector mean = condexp::evaluate_ce_map(maps[next++], points[p]);
      const Matrix cov = condexp::polynomial_conditional_covariance(*ensemble, degree, points[p]);
      add_moments(&mean, &cov);
    };
    if (want_kalman) {
      // Affine update: constant residual covariance E[(Q - W_1(Z))(Q - W_1(Z))^T].
      const Vector mean = condexp::evaluate_ce_map(maps[next++], points[p]);
      add_moments(&mean, &kalman_residual_cov);
    }
    if (want_poly) {
      for (int k : degrees) add_map(k);
    }
    row.push_back(condexp::format_number(s.log_evidence));
    row.push_back(s.has_moments() ? condexp::format_number(s.effective_sample_fraction) : std::string());
    row.push_back(std::to_string(s.flags));
    text += join_csv(row);
  }
  return text;
}

std::string cmd_compare(const RunConfig& cfg) {
  const auto problem = condexp::resolve_problem(cfg.problem);
  if (cfg.format != "json") throw config_error("--format", "compare writes json");
  const Vector y = observation(cfg, problem);
  std::vector<int> degrees = cfg.degrees.empty() ? std::vector<int>{1, 5, 10, 15, 20} : cfg.degrees;
  check_degrees(degrees);

  const condexp::PosteriorEngine engine(problem, make_rule(cfg, problem.germ_dim()), {cfg.threads});
  const auto s = engine.summarize(y);

  ordered_json j;
  j["schema"] = 1;
  j["problem"] = problem.name().empty() ? cfg.problem : problem.name();
  j["observation"] = to_json(y);
  j["cde"] = {{"mean", to_json(s.mean)},
              {"covariance", to_json(s.covariance)},
              {"log_evidence", s.log_evidence},
              {"effective_sample_fraction", s.effective_sample_fraction},
              {"flags", s.flags}};
  ordered_json deltas;

  bool has_oracle = false;
  if (problem.parameter_dim() <= condexp::kMaxOracleDim) {
    try {
      const Record r = oracle_record(cfg, problem, y);
      j["oracle"] = {{"mean", to_json(r.mean)}, {"covariance", to_json(r.covariance)}, {"log_evidence", r.log_evidence}};
      deltas["oracle"] = {{"mean", to_json(abs_delta(s.mean, r.mean))},
                          {"covariance", to_json(Matrix((s.covariance - r.covariance).cwiseAbs()))}};
      has_oracle = true;
    } catch (const condexp::UnsupportedPriorError&) {
    }
  }
  if (!has_oracle) j["oracle"] = nullptr;

  const condexp::Ensemble ensemble = make_ensemble(cfg, problem);
  const Matrix gain = condexp::kalman_gain(ensemble);
  const Vector q_mean = condexp::weighted_mean(ensemble.q, ensemble.weights);
  const Vector z_mean = condexp::weighted_mean(ensemble.z, ensemble.weights);
  const Vector kalman = q_mean + gain * (y - z_mean);
  j["kalman"] = {{"mean", to_json(kalman)}, {"gain", to_json(gain)}};
  deltas["kalman"] = {{"mean", to_json(abs_delta(s.mean, kalman))}};

  ordered_json poly = ordered_json::array();
  ordered_json poly_deltas = ordered_json::array();
  for (int k : degrees) {
    const auto map = condexp::fit_polynomial_ce(ensemble, k);
    const Vector m = condexp::evaluate_ce_map(map, y);
    poly.push_back({{"degree", k},
                    {"mean", to_json(m)},
                    {"condition_estimate", map.condition_estimate},
                    {"rank", map.rank},
                    {"ill_conditioned", map.ill_conditioned}});
    poly_deltas.push_back({{"degree", k}, {"mean", to_json(abs_delta(s.mean, m))}});
  }
  j["poly-ce"] = poly;
  deltas["poly-ce"] = poly_deltas;
  j["eigendecomposition"] = eigen_json(s.covariance);
  j["deltas"] = deltas;
  j["ensemble_size"] = ensemble.size();
  return j.dump(2) + "\n";
}

std::string cmd_export_density(const RunConfig& cfg) {
  const auto problem = condexp::resolve_problem(cfg.problem);
  const Vector y = observation(cfg, problem);
  const auto density = condexp::posterior_density(problem, oracle_grid(cfg, problem), y);
  std::ostringstream out;
  condexp::write_density_csv(density, out);
  return out.str();
}

std::string cmd_export_problem(const RunConfig& cfg) {
  return condexp::problem_to_json(condexp::resolve_problem(cfg.problem));
}

std::string cmd_export_ensemble(const RunConfig& cfg) {
  const auto problem = condexp::resolve_problem(cfg.problem);
  std::ostringstream out;
  condexp::write_ensemble_csv(make_ensemble(cfg, problem), out);
  return out.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    if (!std::cout) throw condexp::IoError("cannot write to standard output");
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw condexp::IoError("--out: cannot open '" + path + "' for writing");
    out << text;
    out.close();
    if (!out) {
      std::remove(tmp.c_str());
      throw condexp::IoError("--out: cannot write '" + path + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw condexp::IoError("--out: cannot write '" + path + "'");
  }
}

void add_common(CLI::App* sub, RunConfig& cfg, bool observation_flags) {
  sub->add_option("--problem", cfg.problem, "Builtin problem name or path to a problem file")->required();
  sub->add_option("--rule", cfg.rule, "Germ quadrature: legendre, gh or mc");
  sub->add_option("--order", cfg.order, "GH order per dimension, or Legendre panel count");
  sub->add_option("--mc-samples", cfg.mc_samples, "Monte Carlo sample count");
  sub->add_option("--seed", cfg.seed, "Monte Carlo seed");
  sub->add_option("--threads", cfg.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  sub->add_option("--out", cfg.out, "Output path (default: standard output)");
  sub->add_option("--grid-points", cfg.grid_points, "Oracle grid points per axis");
  sub->add_option("--ensemble-order", cfg.ensemble_order, "GH order of the filter ensemble");
  if (observation_flags) sub->add_option("--y", cfg.y, "Observation value, comma-separated");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditioned-expectation posterior summaries and filter comparisons"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* summarize = app.add_subcommand("summarize", "Posterior mean and covariance at one observation");
  add_common(summarize, cfg, true);
  summarize->add_option("--method", cfg.method, "cde or oracle");
  summarize->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* sweep = app.add_subcommand("sweep", "Posterior moments over a range of scalar observations");
  add_common(sweep, cfg, true);
  sweep->add_option("--y-range", cfg.y_range, "start:stop:count (inclusive)");
  sweep->add_option("--method", cfg.method, "Comma-separated: cde, oracle, kalman, poly-ce");
  sweep->add_option("--degree", cfg.degrees, "Polynomial degrees for poly-ce")->delimiter(',');
  sweep->add_option("--format", cfg.format, "csv")->check(CLI::IsMember({"csv"}));

  auto* compare = app.add_subcommand("compare", "JSON report comparing all methods at one observation");
  add_common(compare, cfg, true);
  compare->add_option("--degree", cfg.degrees, "Polynomial degrees for poly-ce")->delimiter(',');
  compare->add_option("--format", cfg.format, "json")->check(CLI::IsMember({"json"}));

  auto* density = app.add_subcommand("export-density", "Oracle posterior density on a grid as CSV");
  add_common(density, cfg, true);

  auto* problem = app.add_subcommand("export-problem", "Write a problem file");
  add_common(problem, cfg, false);

  auto* ensemble = app.add_subcommand("export-ensemble", "Write the filter ensemble as CSV");
  add_common(ensemble, cfg, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (sweep->parsed()) cfg.format = cfg.format == "json" ? "csv" : cfg.format;

  try {
    std::string text;
    if (summarize->parsed()) text = cmd_summarize(cfg);
    else if (sweep->parsed()) text = cmd_sweep(cfg);
    else if (compare->parsed()) text = cmd_compare(cfg);
    else if (density->parsed()) text = cmd_export_density(cfg);
    else if (problem->parsed()) text = cmd_export_problem(cfg);
    else text = cmd_export_ensemble(cfg);
    emit(text, cfg.out);
  } catch (const condexp::IoError& e) {
    std::cerr << "condexp: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const condexp::VanishingEvidenceError& e) {
    std::cerr << "condexp: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const condexp::DegenerateDensityError& e) {
    std::cerr << "condexp: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const condexp::Error& e) {
    std::cerr << "condexp: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "condexp: error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}
