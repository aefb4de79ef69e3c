// Command-line entry point: stochflow run|validate <config.json>.

#include <iostream>

#include "CLI11.hpp"
#include "stochflow/scenario.hpp"

namespace sc = stochflow::scenario;

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Lagrangian flow solvers driven by JSON scenarios"};
    app.require_subcommand(1);

    std::string config;
    sc::RunOptions opt;
    auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
    run->add_option("config", config, "Scenario JSON file")->required();
    run->add_flag("--strict", opt.strict, "Exit 4 on resolution or quadrature warnings");
    run->add_option("--workers", opt.workers, "Worker threads (0 = all cores); never changes results");
    run->add_option("--output-dir", opt.output_dir, "Overrides output.directory");

    auto* validate = app.add_subcommand("validate", "Check a scenario and print the resolved config");
    validate->add_option("config", config, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sc::kExitConfig;
    }
    if (*run) return sc::run_file(config, opt, std::cerr);
    return sc::validate_file(config, std::cout, std::cerr);
}
