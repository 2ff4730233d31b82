#pragma once

// JSON description of operator families for the inversion demo.
//
// {
//   "schema_version": 1,
//   "families": [
//     { "name": "scalar",
//       "dim": 1,
//       "base": [[0, 0]],                       // row-major [re, im] pairs
//       "remainder": { "kind": "polynomial",    // A1(z) = sum_k z^k C_k
//                      "coefficients": [ [[1, 0]] ] },
//       "scale": 1.0,                           // optional
//       "projection": "kernel",                 // "kernel" | "none" | [[re, im], ...]
//       "points": [[1e-3, 0], [0, -1e-4]] } ],
//   "random_corpus": { "count": 50, "max_dim": 12, "max_kernel": 3,
//                      "z_min": 1e-6, "z_max": 1e-2, "points_per_family": 1 }
// }
//
// A "rational" remainder adds "poles": [[re, im], ...] and "residues": [matrix, ...],
// giving A1(z) = sum_k z^k C_k + sum_m R_m / (z - p_m).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "wgt/inversion.hpp"

namespace wgt {

struct FamilySpec {
    std::string name;
    OperatorFamily family;
    Projection projection;
    std::vector<Complex> points;
};

std::vector<FamilySpec> parse_family_json(const nlohmann::json& doc, std::uint64_t seed);
std::vector<FamilySpec> load_family_file(const std::filesystem::path& path, std::uint64_t seed);

/// Families A(z) = A0 + z (C0 + z C1) with A0 = A0 S-annihilated on an
/// engineered kernel of dimension 0..max_kernel; points with |z| log-uniform in
/// [z_min, z_max] and uniform phase.
std::vector<FamilySpec> random_family_corpus(int count, std::uint64_t seed, int max_dim = 12,
                                             int max_kernel = 3, double z_min = 1e-6,
                                             double z_max = 1e-2, int points_per_family = 1);

ComplexMatrix parse_matrix(const nlohmann::json& j, Index rows, Index cols,
                           const std::string& where);
nlohmann::json matrix_to_json(const ComplexMatrix& m);

} // namespace wgt
