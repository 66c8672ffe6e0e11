#pragma once

// Scenario orchestration: run a module campaign, write its CSV/SVG outputs
// and judge the configured acceptance bands from those files alone.

#include "deorbit/config.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace deorbit::scenario {

struct Verdict {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ScenarioReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<Verdict> verdicts;
    std::vector<std::filesystem::path> files;

    bool passed() const;
    double metric(const std::string& name) const;
    const Verdict& verdict(const std::string& name) const;
};

class UnknownScenario : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& scenario_names();

/// Runs the scenario into `out_dir` (created if needed) and returns the
/// report, whose verdicts come from `evaluate_outputs` on the written files.
ScenarioReport run_scenario(const std::string& name, const config::MissionConfig& cfg,
                            const std::filesystem::path& out_dir);

/// Re-derives metrics and verdicts from the CSVs a scenario wrote.
ScenarioReport evaluate_outputs(const std::string& name, const config::MissionConfig& cfg,
                                const std::filesystem::path& dir);

/// Reads report.txt and effective_config.ini from `dir`, then evaluates.
ScenarioReport report_directory(const std::filesystem::path& dir);

std::string format_report(const ScenarioReport& report);

}  // namespace deorbit::scenario
