#pragma once

#include <string>
#include <string_view>

namespace condexp {

/// Shortest decimal representation that round-trips to the same double
/// ('.' separator, no locale). Non-finite values print as nan/inf/-inf.
std::string format_number(double value);

/// Parses a full string as a double; throws ParseError on trailing garbage.
double parse_number(std::string_view text);

}  // namespace condexp
