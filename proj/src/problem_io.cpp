#include "condexp/problem_io.hpp"

#include "condexp/errors.hpp"
#include "condexp/format.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace condexp {

namespace {

using nlohmann::json;

const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(where + ": number is not finite");
  return v;
}

std::size_t count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ParseError(where + ": expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix matrix_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    const Vector row = vector_of(j[r], row_where);
    if (static_cast<std::size_t>(row.size()) != cols) throw ParseError(row_where + ": ragged row");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

GaussianSpec gaussian_of(const json& j, const std::string& where) {
  Vector mean = vector_of(field(j, "mean", where), where + ".mean");
  Matrix cov = matrix_of(field(j, "covariance", where), where + ".covariance");
  try {
    return GaussianSpec(std::move(mean), std::move(cov));
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

std::string type_of(const json& j, const std::string& where) {
  const json& t = field(j, "type", where);
  if (!t.is_string()) throw ParseError(where + ".type: expected a string");
  return t.get<std::string>();
}

Prior prior_of(const json& j) {
  const std::string type = type_of(j, "prior");
  if (type == "gaussian") return gaussian_of(j, "prior");
  if (type != "pce") throw ParseError("prior.type: unknown prior type '" + type + "'");
  const std::size_t germ = count(field(j, "germ_dim", "prior"), "prior.germ_dim");
  const json& idx = field(j, "multi_indices", "prior");
  if (!idx.is_array()) throw ParseError("prior.multi_indices: expected an array");
  std::vector<MultiIndex> indices;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::string where = "prior.multi_indices[" + std::to_string(k) + "]";
    if (!idx[k].is_array()) throw ParseError(where + ": expected an array of integers");
    MultiIndex alpha;
    for (const auto& e : idx[k]) alpha.push_back(static_cast<int>(count(e, where)));
    indices.push_back(std::move(alpha));
  }
  Matrix coeffs = matrix_of(field(j, "coefficients", "prior"), "prior.coefficients");
  try {
    return PceExpansion(std::move(coeffs), std::move(indices), germ);
  } catch (const Error& e) {
    throw ParseError(std::string("prior: ") + e.what());
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

PolynomialMap forward_of(const json& j) {
  const std::size_t in = count(field(j, "input_dim", "forward"), "forward.input_dim");
  const std::size_t out = count(field(j, "output_dim", "forward"), "forward.output_dim");
  const json& terms = field(j, "terms", "forward");
  if (!terms.is_array()) throw ParseError("forward.terms: expected an array of strings");
  std::vector<PolynomialMap::Term> parsed;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const std::string where = "forward.terms[" + std::to_string(k) + "]";
    if (!terms[k].is_string()) throw ParseError(where + ": expected a string");
    const auto parts = split(terms[k].get<std::string>(), ':');
    if (parts.size() != 3) throw ParseError(where + ": expected 'output : exponents : coefficient'");
    PolynomialMap::Term term{};
    {
      std::istringstream is(parts[0]);
      long long o = -1;
      if (!(is >> o) || o < 0 || !(is >> std::ws).eof()) throw ParseError(where + ": bad output index");
      term.output = static_cast<std::size_t>(o);
    }
    {
      std::istringstream is(parts[1]);
      long long e = 0;
      while (is >> e) {
        if (e < 0) throw ParseError(where + ": negative exponent");
        term.exponents.push_back(static_cast<int>(e));
      }
      if (!is.eof()) throw ParseError(where + ": bad exponent list");
    }
    try {
      term.coefficient = parse_number(parts[2]);
    } catch (const ParseError&) {
      throw ParseError(where + ": bad coefficient '" + parts[2] + "'");
    }
    parsed.push_back(std::move(term));
  }
  try {
    return PolynomialMap(in, out, std::move(parsed));
  } catch (const Error& e) {
    throw ParseError(std::string("forward: ") + e.what());
  }
}

ErrorModel error_of(const json& j) {
  const std::string type = type_of(j, "error");
  if (type == "gaussian") return gaussian_of(j, "error");
  if (type != "polynomial") throw ParseError("error.type: unknown error type '" + type + "'");
  const json& comps = field(j, "components", "error");
  if (!comps.is_array() || comps.empty()) throw ParseError("error.components: expected a non-empty array");
  PolynomialError err;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const Vector c = vector_of(comps[k], "error.components[" + std::to_string(k) + "]");
    err.components.emplace_back(std::vector<double>(c.data(), c.data() + c.size()));
  }
  return err;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

json gaussian_json(const GaussianSpec& g) {
  return json{{"type", "gaussian"}, {"mean", to_json(g.mean())}, {"covariance", to_json(g.covariance())}};
}

}  // namespace

InverseProblem parse_problem(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("problem file: top level must be an object");
  Prior prior = prior_of(field(j, "prior", "problem"));
  ObservationOperator forward = forward_of(field(j, "forward", "problem"));
  ErrorModel error = error_of(field(j, "error", "problem"));
  std::optional<Vector> observed;
  if (j.contains("observed")) observed = vector_of(j["observed"], "observed");
  std::string name;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ParseError("name: expected a string");
    name = j["name"].get<std::string>();
  }
  try {
    return InverseProblem(std::move(prior), std::move(forward), std::move(error), std::move(observed),
                          std::move(name));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("problem: ") + e.what());
  }
}

std::string problem_to_json(const InverseProblem& problem) {
  json j;
  if (!problem.name().empty()) j["name"] = problem.name();
  if (const auto* g = std::get_if<GaussianSpec>(&problem.prior())) {
    j["prior"] = gaussian_json(*g);
  } else {
    const auto& pce = std::get<PceExpansion>(problem.prior());
    json idx = json::array();
    for (const auto& alpha : pce.multi_indices()) idx.push_back(alpha);
    j["prior"] = json{{"type", "pce"},
                      {"germ_dim", pce.germ_dim()},
                      {"multi_indices", idx},
                      {"coefficients", to_json(pce.coefficients())}};
  }
  const auto* map = std::get_if<PolynomialMap>(&problem.forward());
  if (map == nullptr) throw PreconditionError("black-box observation operators cannot be exported");
  json terms = json::array();
  for (const auto& t : map->terms()) {
    std::string s = std::to_string(t.output) + " :";
    for (int e : t.exponents) s += " " + std::to_string(e);
    s += " : " + format_number(t.coefficient);
    terms.push_back(s);
  }
  j["forward"] = json{{"input_dim", map->input_dim()}, {"output_dim", map->output_dim()}, {"terms", terms}};
  if (const auto* g = std::get_if<GaussianSpec>(&problem.error())) {
    j["error"] = gaussian_json(*g);
  } else {
    json comps = json::array();
    for (const auto& c : std::get<PolynomialError>(problem.error()).components) comps.push_back(c.coefficients());
    j["error"] = json{{"type", "polynomial"}, {"components", comps}};
  }
  if (problem.observed()) j["observed"] = to_json(*problem.observed());
  return j.dump(2) + "\n";
}

InverseProblem load_problem_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open problem file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read problem file '" + path + "'");
  try {
    return parse_problem(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_problem_file(const InverseProblem& problem, const std::string& path) {
  const std::string text = problem_to_json(problem);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("cannot write '" + path + "'");
}

InverseProblem resolve_problem(const std::string& name_or_path) {
  for (const auto& name : builtin_problem_names()) {
    if (name == name_or_path) return builtin_problem(name);
  }
  const bool looks_like_path = name_or_path.find_first_of("/.") != std::string::npos;
  if (!looks_like_path && !std::filesystem::exists(name_or_path)) {
    throw ParseError("unknown builtin problem '" + name_or_path + "' and no such file");
  }
  return load_problem_file(name_or_path);
}

}  // namespace condexp
