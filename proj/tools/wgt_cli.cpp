#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "commands.hpp"
#include "wgt/errors.hpp"
#include "wgt/parallel.hpp"

namespace {

using nlohmann::json;

json read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw wgt::ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw wgt::ParseError(path.string() + ": " + e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Waveguide threshold toolkit: inversion demos, scattering matrices and "
                 "threshold expansions"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config, out = "out";
    int threads = 0;
    std::uint64_t seed = 1;
    bool verify = false;
    app.add_option("-c,--config", config, "JSON configuration file")
        ->required()
        ->envname("WGT_CONFIG");
    app.add_option("-o,--out", out, "output directory")->envname("WGT_OUT")->capture_default_str();
    app.add_option("-t,--threads", threads, "worker threads, 0 = hardware concurrency")
        ->envname("WGT_THREADS")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "seed for generated families")->envname("WGT_SEED");
    app.add_flag("--verify", verify, "cross-check expansions against direct inversion")
        ->envname("WGT_VERIFY");

    const std::map<std::string, std::pair<std::string, std::function<int(wgt::cli::RunContext&)>>>
        commands = {
            {"invert-demo", {"invert every family at its sample points", wgt::cli::cmd_invert_demo}},
            {"modes", {"list transverse modes and thresholds", wgt::cli::cmd_modes}},
            {"smatrix", {"channel scattering matrices at regular energies", wgt::cli::cmd_smatrix}},
            {"threshold-scan", {"S-matrix entries approaching a threshold", wgt::cli::cmd_threshold_scan}},
            {"expansion", {"threshold expansion against direct inversion", wgt::cli::cmd_expansion}},
            {"eigenvalues", {"embedded and discrete eigenvalue candidates", wgt::cli::cmd_eigenvalues}},
            {"verify", {"run the configured self-checks", wgt::cli::cmd_verify}},
        };
    for (const auto& [name, cmd] : commands) app.add_subcommand(name, cmd.first);

    CLI11_PARSE(app, argc, argv);
    const std::string name = app.get_subcommands().front()->get_name();

    std::unique_ptr<wgt::ArtifactSet> artifacts;
    try {
        artifacts = std::make_unique<wgt::ArtifactSet>(out);
        wgt::TaskTimer timer;
        wgt::cli::RunContext ctx;
        ctx.config_path = config;
        ctx.config = read_config(config);
        ctx.out = artifacts.get();
        ctx.timer = &timer;
        ctx.threads = threads > 0 ? threads : wgt::default_threads();
        ctx.seed = seed;
        ctx.verify = verify;

        const int code = commands.at(name).second(ctx);
        artifacts->write_manifest({{"tool", "wgt_cli"},
                                   {"version", "0.1.0"},
                                   {"command", name},
                                   {"config_path", config},
                                   {"config", ctx.config},
                                   {"seed", seed},
                                   {"threads", ctx.threads},
                                   {"verify", verify},
                                   {"exit_code", code},
                                   {"timings", timer.to_json()},
                                   {"achieved", ctx.achieved}});
        if (code != 0) std::fprintf(stderr, "wgt_cli: %s: a check failed\n", name.c_str());
        return code;
    } catch (const std::exception& e) {
        if (artifacts) artifacts->discard();
        std::fprintf(stderr, "wgt_cli: %s: %s\n", name.c_str(), e.what());
        return 2;
    }
}
