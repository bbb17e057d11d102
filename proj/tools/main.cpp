// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include "runner.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace iotln::tools;

int main(int argc, char** argv)
{
    CLI::App app{"iotln: IoT payments through an untrusted LN gateway, simulated"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run one scenario and write its reports");
    std::string config_path, positional, out = "out", scenario, format;
    std::optional<std::uint64_t> seed;
    run_cmd->add_option("config_file", positional, "config file (same as --config)");
    run_cmd->add_option("--config", config_path, "config file");
    run_cmd->add_option("--out", out, "output directory")->capture_default_str();
    run_cmd->add_option("--seed", seed, "overrides the config seed");
    run_cmd->add_option("--scenario", scenario, "overrides the config scenario");
    run_cmd->add_option("--format", format, "csv or text, overrides the config format");

    app.add_subcommand("keys", "list config keys")->callback([] { std::cout << config_reference(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }
    if (!run_cmd->parsed()) return 0;

    try {
        if (!config_path.empty() && !positional.empty() && config_path != positional)
            throw ConfigError("two different config files given");
        if (config_path.empty()) config_path = positional;
        ScenarioConfig config = config_path.empty() ? ScenarioConfig{} : load_config(config_path);
        if (seed) config.seed = *seed;
        if (!scenario.empty()) config.scenario = scenario;
        if (!format.empty()) {
            if (format == "csv")
                config.format = OutputFormat::Csv;
            else if (format == "text")
                config.format = OutputFormat::Text;
            else
                throw ConfigError("--format: expected csv or text");
        }
        return run(config, out, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "scenario failed: " << e.what() << "\n";
        return kExitScenarioFailure;
    }
}
