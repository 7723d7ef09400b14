#pragma once

#include <string>
#include <variant>

#include "json.hpp"
#include "statgames/lens.hpp"

namespace statgames::io {

/// Malformed or non-stochastic input; the message names the file and field.
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};

using Json = nlohmann::json;

enum class Kind { kernel, dist, gauss_channel, gauss_state, lens };
const char* to_string(Kind k);

/// Reads and parses a JSON file; syntax errors carry line and column.
Json load_json(const std::string& path);
/// Kind of a model document, decided by its keys.
Kind detect(const Json& j, const std::string& where = "$");

Channel parse_channel(const Json& j, const std::string& where = "$");
State parse_state(const Json& j, const std::string& where = "$");
/// {"fwd": channel, "bwd": "exact" | [{"name", "prior", "channel"}, ...]}; a bare
/// channel is read as its exact lens.
BayesLens parse_lens(const Json& j, const std::string& where = "$");

/// Observation literal: a label or index (discrete), or numbers separated by
/// commas or a JSON array (Gaussian).
Point parse_point(const std::string& text, const Object& space);

Json to_json(const Channel& c);
Json to_json(const State& s);

}  // namespace statgames::io
