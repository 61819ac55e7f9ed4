#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "entrolip/entrolip.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

int run(const std::string& config_path) {
    entrolip::ExperimentConfig cfg;
    try {
        cfg = entrolip::load_config(config_path);
    } catch (const entrolip::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    try {
        const auto res = entrolip::run_experiment(cfg);
        entrolip::write_outputs(cfg, res);
        if (res.exit_code == 0)
            std::printf("pass (report: %s, table: %s)\n", cfg.report_path.c_str(),
                        cfg.table_path.c_str());
        else if (res.exit_code == 1)
            std::printf("check FAILED (see %s)\n", cfg.report_path.c_str());
        else
            std::printf("solver non-convergence (see %s)\n", cfg.report_path.c_str());
        return res.exit_code;
    } catch (const entrolip::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int validate(const std::string& config_path) {
    try {
        entrolip::load_config(config_path);
        std::printf("ok\n");
        return 0;
    } catch (const entrolip::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entrolip: entropic optimal transport Lipschitz-bound verification"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
    run_cmd->add_option("config", config_path, "path to the config file")->required();

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "validate a config file without running");
    validate_cmd->add_option("config", validate_path, "path to the config file")->required();

    app.add_subcommand("version", "print the version");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return run(config_path);
    if (validate_cmd->parsed()) return validate(validate_path);
    std::printf("entrolip %s\n", kVersion);
    return 0;
}
