#pragma once

#include <optional>
#include <string>

#include "ellcov/covering.hpp"
#include "ellcov/isosystem.hpp"
#include "ellcov/schlesinger.hpp"
#include "json.hpp"

namespace ellcov {

using Json = nlohmann::ordered_json;

// Complex numbers are [re, im] pairs.
Json complex_to_json(cplx z);
cplx complex_from_json(const Json& j, const std::string& what);

// {"N", "lambda", "gamma", "alpha", "mu", "basepoint_shift"}; unknown keys
// and malformed values raise StateFormatError.
Json covering_to_json(const EllipticCoveringState& s);
EllipticCoveringState covering_from_json(const Json& j);

// {"K", "count", "coefficients": {"J[m].AB": [re, im], ...}}, m from 0.
Json jstate_to_json(const JState& J);
JState jstate_from_json(const Json& j);

// {"K", "mu", "z", "residues": {"A[j].AB": ...}, "trA2", "seed"?}. trA2 is
// recomputed on import.
Json schlesinger_to_json(const SchlesingerState& s, std::optional<unsigned> seed = std::nullopt);
SchlesingerState schlesinger_from_json(const Json& j);

}  // namespace ellcov
