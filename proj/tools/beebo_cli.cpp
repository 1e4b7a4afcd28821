#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "beebo/problems.hpp"
#include "beebo/runner.hpp"

namespace {

int load(const std::string& path, beebo::RunSpec& spec) {
    try {
        spec = beebo::parse_runspec(path);
        beebo::apply_environment(spec);
        return beebo::kExitOk;
    } catch (const beebo::ConfigError& e) {
        spdlog::error("{}", e.what());
        return e.exit_code();
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batched Bayesian optimization benchmark runner"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    std::string run_path, validate_path, export_dir;
    auto* run_cmd = app.add_subcommand("run", "Execute every cell of a run spec");
    run_cmd->add_option("spec", run_path, "Run spec (JSON)")->required();
    auto* export_cmd = app.add_subcommand("export", "Write plot-ready CSV files for a results directory");
    export_cmd->add_option("dir", export_dir, "Results directory")->required();
    auto* list_cmd = app.add_subcommand("list-problems", "Print the registered problem ids");
    auto* validate_cmd = app.add_subcommand("validate", "Check a run spec without running it");
    validate_cmd->add_option("spec", validate_path, "Run spec (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : beebo::kExitConfig;
    }
    spdlog::set_default_logger(spdlog::stderr_color_mt("beebo"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    if (*list_cmd) {
        for (const auto& id : beebo::list_problems()) std::cout << id << '\n';
        return beebo::kExitOk;
    }
    if (*validate_cmd) {
        beebo::RunSpec spec;
        if (const int code = load(validate_path, spec); code != beebo::kExitOk) return code;
        std::size_t runs = 0;
        for (const auto& cell : spec.cells) runs += cell.replicates.size();
        std::cout << "ok: " << spec.cells.size() << " cells, " << runs << " runs, output "
                  << spec.output_dir.string() << '\n';
        return beebo::kExitOk;
    }
    if (*export_cmd) {
        try {
            beebo::export_plot_data(export_dir);
            return beebo::kExitOk;
        } catch (const std::exception& e) {
            spdlog::error("{}", e.what());
            return beebo::kExitPartialFailure;
        }
    }
    if (*run_cmd) {
        beebo::RunSpec spec;
        if (const int code = load(run_path, spec); code != beebo::kExitOk) return code;
        try {
            return beebo::run(spec).exit_code();
        } catch (const beebo::ConfigError& e) {
            spdlog::error("{}", e.what());
            return e.exit_code();
        }
    }
    return beebo::kExitConfig;
}
