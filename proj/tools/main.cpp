#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "bellgauss/cli.hpp"

namespace cli = bellgauss::cli;

int main(int argc, char** argv) {
    CLI::App app{"Bell-CHSH tests with Gaussian resources and homodyne detection"};
    app.require_subcommand(1);

    const std::pair<const char*, const char*> commands[] = {
        {"sweep", "optimize |B| at every point of an r (and V) grid; writes sweep.csv"},
        {"optimize", "optimize |B| at one point; writes optimize.json"},
        {"validate", "run a validation suite; writes validate-<suite>.json"},
        {"pdf", "dump a joint density on a grid; writes pdf.csv"},
    };

    std::string config_file, suite_arg;
    std::map<std::string, std::string> values;   // key -> raw value, ordered by key table below
    for (auto [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_file, "key = value config file");
        for (const auto& k : cli::keys()) {
            std::string flag = "--" + k.name;
            std::replace(flag.begin(), flag.end(), '_', '-');
            sub->add_option(flag, values[k.name], k.help);
        }
        if (std::string(name) == "validate") sub->add_option("name", suite_arg, "suite name (same as --suite)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    std::string text;
    if (!config_file.empty()) {
        std::ifstream f(config_file);
        if (!f) {
            std::cerr << "cannot read " << config_file << "\n";
            return cli::kBadConfig;
        }
        std::stringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }
    if (!suite_arg.empty()) values["suite"] = suite_arg;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& k : cli::keys()) {
        if (auto it = values.find(k.name); it != values.end() && !it->second.empty()) overrides.emplace_back(k.name, it->second);
    }
    const auto loaded = cli::load_config(text, config_file.empty() ? "config" : config_file, overrides);
    if (!loaded.ok()) {
        for (const auto& e : loaded.errors) std::cerr << "config error: " << e << "\n";
        return cli::kBadConfig;
    }
    return cli::run(command, loaded.config, std::cout);
}
