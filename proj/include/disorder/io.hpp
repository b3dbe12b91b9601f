#pragma once

#include "disorder/model.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>

namespace disorder {

// Shortest round-trip decimal form; stable across runs of the same build.
std::string format_double(double v);

// Model config schema:
// {"states":[...], "weights":[...], "f0":[[...]], "f1":[[...]], "f2":[[...]],
//  "prior":{"pi":..,"rho":..,"p1":..,"p2":..}, "x0":...}
// Numbers are parsed as 64-bit floats; states and x0 may be strings or numbers.
// Throws ConfigError on malformed input.
ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::ordered_json model_to_json(const ModelSpec& model);

ModelSpec load_model_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace disorder
