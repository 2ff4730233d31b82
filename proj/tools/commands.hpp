#pragma once

// Subcommands of wgt_cli. Each reads the parsed configuration, writes its
// artifacts through ctx.out and returns the process exit code (0 pass,
// 3 a check failed). Errors propagate as wgt::Error.
//
// Model-driven commands read an optional "run" object next to the model keys:
//
//   "run": {
//     "modes":          { "count": 10 },
//     "smatrix":        { "lambdas": [2.5, 6.0] }          // or
//                       { "lambda_min": 1.5, "lambda_max": 3.5, "count": 5 },
//     "threshold_scan": { "threshold": 2, "epsilon": 0.5, "halvings": 14,
//                         "pairs": [[1, 1, 1, -1], [1, 1, 2, 1], [2, -1, 2, 1]] },
//     "expansion":      { "threshold": 2, "epsilon": 0.5, "samples": 16,
//                         "r_min": 1e-3, "r_max": 0.2 },
//     "eigenvalues":    { "lambda_min": -5, "lambda_max": 0.9, "resolution": 200,
//                         "detection": 1e-6 },
//     "verify":         { "thresholds": [1, 2], "energies": [1.5, 2.5, 6.0],
//                         "samples": 16 }
//   }
//
// Thresholds are 1-based indices into the sorted list of distinct transverse
// eigenvalues; channels are [n, sigma] with n the 1-based mode number.

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "wgt/artifacts.hpp"

namespace wgt::cli {

struct RunContext {
    std::filesystem::path config_path;
    nlohmann::json config;
    ArtifactSet* out = nullptr;
    TaskTimer* timer = nullptr;
    int threads = 1;
    std::uint64_t seed = 1;
    bool verify = false;
    nlohmann::json achieved = nlohmann::json::object(); // tolerances and certificates
};

int cmd_invert_demo(RunContext& ctx);
int cmd_modes(RunContext& ctx);
int cmd_smatrix(RunContext& ctx);
int cmd_threshold_scan(RunContext& ctx);
int cmd_expansion(RunContext& ctx);
int cmd_eigenvalues(RunContext& ctx);
int cmd_verify(RunContext& ctx);

} // namespace wgt::cli
