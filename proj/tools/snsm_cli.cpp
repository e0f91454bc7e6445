// snsm-cli: run one analysis subcommand and write its reports plus a manifest.
//
// Exit status: 0 all pass flags hold, 1 a pass flag failed, 2 configuration
// or usage error, 3 runtime error.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "snsm/cli/commands.hpp"

namespace {

constexpr int exit_fail = 1;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

void diagnostic(const char* kind, const std::string& message) {
    std::cerr << "snsm-cli: " << kind << " error: " << message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    using namespace snsm::cli;

    CLI::App app{"Stochastic Navier-Stokes Galerkin harness"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    int threads = int(std::max(1u, std::thread::hardware_concurrency()));
    bool emit_events = false;
    app.add_option("--config", config_path, "run configuration (key = value lines)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "master seed, overrides the config");
    app.add_option("--paths", paths, "ensemble size for every study, overrides the config")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--emit-events", emit_events, "also write the jump and switch event log");

    const char* help[][2] = {
        {"simulate", "integrate an ensemble and write trajectories"},
        {"moments", "a priori moment estimates against the Gronwall bounds"},
        {"energy", "energy-equality residuals"},
        {"martingale-test", "martingale-problem statistics with a viscosity control"},
        {"continuity", "continuity in the initial data under coupled noise"},
        {"eps-study", "Cauchy distances as epsilon halves"},
        {"refine", "time-step or Galerkin refinement and the increment proxy"},
        {"chain-test", "regime-chain simulators against their generator"},
        {"audit-hypotheses", "noise-coefficient hypotheses against closed-form constants"},
    };
    for (const auto& h : help) app.add_subcommand(h[0], h[1]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    RunConfig config;
    try {
        config = config_path.empty() ? parse_config("", "<defaults>") : load_config(config_path);
        if (seed) config.sim.seed = *seed;
        if (paths) {
            config.sim.paths = *paths;
            config.study.continuity_paths = *paths;
            config.study.eps_paths = *paths;
            config.study.increment_paths = *paths;
            config.study.chain_test_paths = std::max<std::size_t>(*paths, 100);
        }
    } catch (const ConfigError& e) {
        diagnostic("config", e.what());
        return exit_config;
    }

    const auto start = std::chrono::steady_clock::now();
    CommandResult result;
    try {
        result = run_command(subcommand, config, {threads, emit_events});
    } catch (const std::invalid_argument& e) {
        diagnostic("config", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        diagnostic("runtime", e.what());
        return exit_runtime;
    }

    try {
        RunManifest manifest;
        manifest.config_hash = config_hash(config);
        manifest.seed = config.sim.seed;
        manifest.subcommand = subcommand;
        manifest.files = emit_reports(result.reports, out_dir);
        manifest.files.push_back("manifest.json");
        manifest.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_file(std::filesystem::path(out_dir) / "manifest.json", manifest.to_json().dump());
    } catch (const std::exception& e) {
        diagnostic("output", e.what());
        return exit_runtime;
    }
    for (const auto& r : result.reports)
        if (r.text) std::cout << r.text->str();
    return result.pass ? 0 : exit_fail;
}
