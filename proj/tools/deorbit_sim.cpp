// Command-line front end: run a scenario, validate a configuration, or
// re-judge an output directory.
//
// Exit codes: 0 success, 1 acceptance verdict failed, 2 usage or
// configuration error (including an unknown scenario).

#include "deorbit/config.hpp"
#include "deorbit/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace deorbit;

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

config::MissionConfig load(const std::string& path) {
    return path.empty() ? config::MissionConfig{} : config::load_config(path);
}

std::string scenario_list() {
    std::string s;
    for (const auto& n : scenario::scenario_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-thrust deorbit mission simulator"};
    app.require_subcommand(1);

    std::string scenario_name, config_path, out_dir, report_dir;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run a scenario and write its outputs");
    run->add_option("scenario", scenario_name, "One of: " + scenario_list())->required();
    run->add_option("--config", config_path, "Configuration file (defaults when omitted)");
    run->add_option("--seed", seed, "Master seed, overrides [run] seed");
    run->add_option("--out", out_dir, "Output directory, overrides [run] output_dir");

    auto* validate = app.add_subcommand("validate", "Check a configuration and echo the effective values");
    validate->add_option("--config", config_path, "Configuration file")->required();

    auto* report = app.add_subcommand("report", "Re-evaluate a scenario output directory");
    report->add_option("dir", report_dir, "Directory written by `run`")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*run) {
            auto cfg = load(config_path);
            if (seed) cfg.run.seed = *seed;
            if (!out_dir.empty()) cfg.run.output_dir = out_dir;
            cfg.validate();
            const auto rep = scenario::run_scenario(scenario_name, cfg, cfg.run.output_dir);
            std::cout << scenario::format_report(rep);
            return rep.passed() ? kOk : kFail;
        }
        if (*validate) {
            const auto cfg = load(config_path);
            cfg.validate();
            std::cout << config::echo_config(cfg);
            return kOk;
        }
        if (*report) {
            const auto rep = scenario::report_directory(report_dir);
            std::cout << scenario::format_report(rep);
            return rep.passed() ? kOk : kFail;
        }
    } catch (const scenario::UnknownScenario& e) {
        std::cerr << "error: " << e.what() << " (known: " << scenario_list() << ")\n";
        return kUsage;
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    }
    return kUsage;
}
