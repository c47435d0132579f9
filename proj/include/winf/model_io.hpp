#pragma once

#include <filesystem>

#include "json.hpp"
#include "winf/density.hpp"

namespace winf {

// Density specification files are JSON documents:
//
//   {
//     "schema": "winf-density/1",          (optional)
//     "id": "tent",
//     "pieces": [
//       {"from": 0, "to": 0.5, "kind": "power", "coefficient": 4, "center": 0.5, "exponent": 1},
//       {"from": 0.5, "to": 1, "kind": "constant", "value": 2},
//       {"from": 0, "to": 1, "kind": "polynomial", "coefficients": [1, 0, 3]}
//     ],
//     "zeros": [{"location": 0.5, "order": 1, "lower": 4, "upper": 4, "radius": 0.25}],
//     "singulars": [{"location": 0, "exponent": -0.5, "coefficient": 0.5}]
//   }
//
// Coefficients describe an unnormalized shape; the model rescales it to unit mass.
inline constexpr const char* kDensitySchema = "winf-density/1";

DensitySpec parse_density_spec(const nlohmann::json& doc);
DensitySpec load_density_spec(const std::filesystem::path& path);
DensityModel load_density(const std::filesystem::path& path);

nlohmann::json to_json(const ValidationReport& report);

// JSON has no infinity; unbounded values are written as the string "inf".
nlohmann::json json_number(double v);

}  // namespace winf
