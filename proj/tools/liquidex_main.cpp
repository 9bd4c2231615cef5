#include <CLI11.hpp>
#include <iostream>

#include "cli/commands.hpp"

namespace {

void add_common_options(CLI::App* cmd, liquidex::cli::CommandOptions* opt) {
    cmd->add_option("--config", opt->config_path, "JSON configuration file");
    cmd->add_option("--out", opt->out_dir, "output directory")->required();
    cmd->add_option("--seed", opt->seed, "master seed override");
    cmd->add_option("--paths", opt->n_paths, "path-count override");
    cmd->add_option("--threads", opt->threads, "worker threads (output is thread-count invariant)");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace liquidex::cli;

    CLI::App app{"Closed-form optimal liquidation under GBM: experiments and verification"};
    app.require_subcommand(1);

    CommandOptions opt;
    int (*runner)(const CommandOptions&) = nullptr;

    auto* paths = app.add_subcommand("paths", "single-scenario time series for the optimal strategy");
    add_common_options(paths, &opt);
    paths->callback([&] { runner = run_paths; });

    auto* sweep = app.add_subcommand("sweep", "parameter sweep over sigma, lambda or kappa");
    add_common_options(sweep, &opt);
    sweep->callback([&] { runner = run_sweep; });

    auto* oracle = app.add_subcommand("oracle-check", "discrete dynamic-programming verification suite");
    add_common_options(oracle, &opt);
    oracle->callback([&] { runner = run_oracle_check; });

    auto* multi = app.add_subcommand("multi", "multi-asset gain schedule and correlated simulation");
    add_common_options(multi, &opt);
    multi->callback([&] { runner = run_multi; });

    auto* drift = app.add_subcommand("drift-demo", "stochastic-drift presets and drift-offset diagnostics");
    add_common_options(drift, &opt);
    drift->callback([&] { runner = run_drift_demo; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
    }

    try {
        return runner(opt);
    } catch (const std::exception& e) {
        std::cerr << "liquidex: " << e.what() << '\n';
        return exit_code_for_current_exception();
    }
}
