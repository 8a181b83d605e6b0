#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"

using namespace geofuse::cli;

int main(int argc, char** argv) {
    CLI::App app{"geofuse: synthetic multispectral classification pipeline with metaheuristic tuning"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool dump = false;
    app.add_option("-c,--config", config_path, "key = value configuration file");
    app.add_option("--set", overrides, "override a setting, key=value (repeatable)");
    app.add_option("-o,--out", out_dir, "output directory");
    app.add_option("--seed", seed, "master seed");
    app.add_flag("--dump-config", dump, "print the effective configuration before running");

    using Command = int (*)(const ExperimentConfig&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Command>> commands{
        {"generate", "synthesize the scene and the time series", cmd_generate},
        {"preprocess", "stretch/equalize and fit PCA", cmd_preprocess},
        {"optimize", "hyperparameter search (search.algorithm)", cmd_optimize},
        {"train", "train baseline and searched configurations", cmd_train},
        {"evaluate", "metrics for every trained run", cmd_evaluate},
        {"audit", "constraint audit of the preferred run", cmd_audit},
        {"report", "write the six result tables", cmd_report},
        {"all", "every stage in order", cmd_all},
    };
    for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    ExperimentConfig config;
    try {
        std::optional<std::filesystem::path> path;
        if (!config_path.empty()) {
            path = config_path;
            if (!std::filesystem::exists(*path)) {
                std::cerr << "error: config file not found: " << config_path << '\n';
                return kUsage;
            }
        }
        if (!out_dir.empty()) overrides.push_back("out=" + out_dir);
        if (seed) overrides.push_back("seed=" + std::to_string(*seed));
        config = load_config(path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    if (dump) std::cout << dump_config(config);

    for (const auto& [name, help, fn] : commands) {
        if (!app.got_subcommand(name)) continue;
        try {
            return fn(config, std::cout);
        } catch (const std::exception& e) {
            std::cerr << "error: " << name << ": " << e.what() << '\n';
            return kRuntime;
        }
    }
    return kUsage;
}
