#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smolkit/errors.hpp"
#include "smolkit/parallel.hpp"
#include "smolkit/scenario.hpp"

namespace {

// --out wins, then output.dir from the config, then the environment, then ./smolkit_out/<name>.
std::string output_dir(const smolkit::Scenario& s, const std::string& cli_out) {
    if (!cli_out.empty()) return cli_out;
    if (!s.output_dir.empty()) return s.output_dir;
    if (const char* env = std::getenv(smolkit::kOutputDirEnv); env != nullptr && *env != '\0') {
        return (std::filesystem::path(env) / s.name).string();
    }
    return (std::filesystem::path("smolkit_out") / s.name).string();
}

int run_scenario(const std::string& config, const std::string& out, int workers, const smolkit::Mode* force) {
    try {
        smolkit::set_workers(workers);
        smolkit::Scenario s = smolkit::parse_config(config);
        if (force != nullptr) s.mode = *force;
        const std::string dir = output_dir(s, out);
        const int code = smolkit::execute(s, dir, std::cout);
        std::cout << "output: " << dir << '\n';
        return code;
    } catch (const smolkit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
    } catch (const smolkit::HypothesisError& e) {
        std::cerr << "hypothesis error: " << e.what() << '\n';
    } catch (const smolkit::StepSizeError& e) {
        std::cerr << "step size error: " << e.what() << " (cell " << e.cell() << ", mass " << e.mass()
                  << ", needs dt <= " << e.needed_dt() << "; set integrator.auto_halve = true)\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return smolkit::kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smolkit: coagulation-diffusion solver, tracer simulator and bound monitors"};
    app.require_subcommand(1);

    std::string config, out;
    int workers = 1;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config, "Scenario file (key = value)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--workers", workers, "Worker threads (results do not depend on it)")
            ->check(CLI::Range(1, 1024));
        cmd->add_option("--out", out, std::string("Output directory (default: output.dir, then $") +
                                          smolkit::kOutputDirEnv + ")");
    };
    CLI::App* run = app.add_subcommand("run", "Run the scenario in its configured mode");
    CLI::App* verify = app.add_subcommand("verify", "Run a spatial scenario with its listed monitors");
    CLI::App* gelscan = app.add_subcommand("gelscan", "Run the gelation refinement scan");
    for (CLI::App* cmd : {run, verify, gelscan}) add_common(cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? smolkit::kExitPass : smolkit::kExitError;
    }

    const smolkit::Mode verify_mode = smolkit::Mode::Verify;
    const smolkit::Mode gelscan_mode = smolkit::Mode::Gelscan;
    if (*verify) return run_scenario(config, out, workers, &verify_mode);
    if (*gelscan) return run_scenario(config, out, workers, &gelscan_mode);
    return run_scenario(config, out, workers, nullptr);
}
