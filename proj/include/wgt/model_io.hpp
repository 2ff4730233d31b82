#pragma once

// JSON model configuration for the waveguide.
//
// {
//   "schema_version": 1,
//   "cross_section": { "kind": "interval", "length": "pi" },
//                  // or { "kind": "rectangle", "lengths": [a, b] }
//   "potential": { "kind": "square_well", "depth": 1.0,
//                  "omega_lo": [1.0], "omega_hi": [2.0], "x_lo": 0.0, "x_hi": 1.0 },
//              // or { "kind": "table", "omega_edges": [...], "x_edges": [...],
//              //      "values": [[...], ...] }   (values[i_omega][i_x])
//              // or { "kind": "zero", "x_lo": 0.0, "x_hi": 1.0 }
//   "grid": { "n_omega": 4, "n_x": 200, "rule": "auto" },  // auto | gauss | uniform
//   "n_max": 0,            // optional; 0 selects n_max from tail_tol
//   "tail_tol": 1e-3,      // optional
//   "degeneracy_tol": -1   // optional; < 0 selects the default
// }
//
// Lengths and coordinates accept numbers or strings of the form "pi", "2*pi",
// "pi/2", "3*pi/4".

#include <filesystem>

#include "json.hpp"
#include "wgt/waveguide.hpp"

namespace wgt {

struct ModelConfig {
    WaveguideModel model;
    int n_max = 0;
    double tail_tol = 1e-3;
    nlohmann::json source;
};

double parse_length(const nlohmann::json& j, const std::string& where);
ModelConfig parse_model_json(const nlohmann::json& doc);
ModelConfig load_model_file(const std::filesystem::path& path);

} // namespace wgt
