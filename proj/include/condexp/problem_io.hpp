#pragma once

#include "condexp/forward.hpp"

#include <string>

namespace condexp {

/// Problem files are JSON objects:
///
///   {
///     "name": "optional label",
///     "prior": {"type": "gaussian", "mean": [..], "covariance": [[..], ..]}
///           |  {"type": "pce", "germ_dim": d, "multi_indices": [[..], ..],
///               "coefficients": [[..], ..]}            (output dim x terms)
///     "forward": {"input_dim": n, "output_dim": m,
///                 "terms": ["0 : 3 0 : 1.5", ..]}      (output : exponents : coefficient)
///     "error": {"type": "gaussian", "mean": [..], "covariance": [[..], ..]}
///           |  {"type": "polynomial", "components": [[c0, c1, ..], ..]}
///     "observed": [..]                                 (optional)
///   }
///
/// Output indices in terms are zero-based. Polynomial error components list
/// monomial coefficients in ascending degree of the standard-normal germ.
/// Numbers are written in shortest round-trip form, so export followed by
/// import reproduces every coefficient bit for bit.
InverseProblem parse_problem(const std::string& json_text);
std::string problem_to_json(const InverseProblem& problem);

/// Throws IoError when the file cannot be read, ParseError when malformed.
InverseProblem load_problem_file(const std::string& path);
void save_problem_file(const InverseProblem& problem, const std::string& path);

/// A builtin name when one matches, otherwise a path to a problem file.
/// A bare word that is neither raises ParseError.
InverseProblem resolve_problem(const std::string& name_or_path);

}  // namespace condexp
