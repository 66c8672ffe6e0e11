#pragma once

// Mission configuration: a plain-text `[section] key = value` file whose
// omitted keys keep the defaults below.

#include "deorbit/avoidance.hpp"
#include "deorbit/dtn.hpp"
#include "deorbit/orbital.hpp"
#include "deorbit/power.hpp"
#include "deorbit/relnav.hpp"

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace deorbit::config {

struct PowerSection {
    power::PowerConfig battery;
    // Keep the thruster off in eclipse once SoC reaches the floor plus the
    // bus reserve (full-mission only).
    bool gate_thrust = true;
    // Bus energy held back for the rest of an eclipse, minutes of bus load.
    double bus_reserve_min = 40.0;
    // Single-eclipse sizing check.
    double check_load_w = 7300.0;
    double check_eclipse_min = 35.0;
};

struct NavSection {
    nav::NavConfig filter;
    double q_proximity = 1e-11;
    double q_longduration = 1e-10;
    double proximity_duration_s = 6000.0;
    double longduration_duration_s = 3600.0;
    int seeds = 20;
    // Empty keeps the built-in starting geometry; otherwise x,y,z,vx,vy,vz (m, m/s).
    std::vector<double> proximity_start;
    std::vector<double> longduration_start;
};

struct DtnSection {
    double duration_s = 21600.0;
    double drain_s = 600.0;
    double rate_grid_s = 1.0;
    double throughput_sample_s = 10.0;
    std::uint64_t capacity_primary_b = 0;
    std::uint64_t capacity_relay_b = 0;
    std::uint64_t capacity_ground_b = 0;
    dtn::LinkModel primary_relay;
    dtn::LinkModel relay_ground;
    dtn::Flow safety;
    dtn::Flow metadata;
    dtn::Flow bulk;
    bool poisson = false;
    double histogram_bin_s = 0.25;
    std::vector<double> histogram_horizons_s{5.0, 4000.0};
    // Geometry used by full-mission.
    double relay_altitude_km = 1400.0;
    double relay_inclination_deg = 0.0;
    double relay_phase_deg = 30.0;
    double ground_lat_deg = 13.0;
    double ground_lon_deg = 0.0;
    double min_elevation_deg = 5.0;

    DtnSection();
    dtn::Topology topology() const;
    dtn::TrafficModel traffic() const;
    dtn::DtnRunSpec run_spec(std::uint64_t seed) const;
};

struct AvoidanceSection {
    avoid::AvoidancePolicy policy;
    int intruders = 1;
    std::string intruder_id = "debris-1";
    // The intruder is placed on the nominal trajectory at this epoch.
    double intruder_tca_s = 14400.0;
    double intruder_miss_km = 0.1;
};

struct RunSection {
    std::uint64_t seed = 42;
    std::string output_dir = "out";
};

/// Bands the scenario verdicts are judged against.
struct AcceptanceSection {
    double deorbit_days_min = 7.2;
    double deorbit_days_max = 8.8;
    double propellant_min_kg = 3.7;
    double propellant_max_kg = 4.5;
    double decay_r2_min = 0.99;
    double decay_middle_fraction = 0.8;
    double proximity_position_rmse_max_m = 10.0;
    double proximity_velocity_rmse_max_ms = 0.03;
    int proximity_min_passing = 18;
    double nees_confidence = 0.95;
    double longduration_rmse_min_m = 30.0;
    double longduration_rmse_max_m = 500.0;
    double dtn_latency_s = 1.0;
    double dtn_within_min = 0.85;
    double dtn_within_max = 0.98;
    double dtn_tail_min_s = 1000.0;
    double dtn_tail_max_s = 4000.0;
    double relay_backlog_target_b = 65000.0;
    double relay_backlog_factor = 2.0;
};

struct MissionConfig {
    orbit::DeorbitConfig orbital;
    PowerSection power;
    NavSection nav;
    DtnSection dtn;
    AvoidanceSection avoidance;
    RunSection run;
    AcceptanceSection acceptance;

    MissionConfig();
    /// Cross-field checks through each module's own invariants.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::string key = {}, int line = 0)
        : std::runtime_error(message), key_(std::move(key)), line_(line) {}
    const std::string& key() const { return key_; }
    int line() const { return line_; }

private:
    std::string key_;
    int line_;
};

struct Field {
    std::string section;
    std::string key;
    std::string doc;
    std::function<std::string(const MissionConfig&)> get;
    // Parses and range-checks; throws std::invalid_argument with the reason.
    std::function<void(MissionConfig&, const std::string&)> set;
};

/// Every configurable key, in echo order.
const std::vector<Field>& registry();

MissionConfig parse_config(const std::string& text, const std::string& origin = "<config>");
MissionConfig load_config(const std::filesystem::path& path);
/// Applies a file on top of an existing configuration.
void apply_config(MissionConfig& cfg, const std::string& text, const std::string& origin);

/// Full effective configuration in the same format; parses back to `cfg`.
std::string echo_config(const MissionConfig& cfg);

std::string format_rate_table(const std::vector<dtn::RateStep>& table);
std::vector<dtn::RateStep> parse_rate_table(const std::string& text);
std::string format_outages(const std::vector<dtn::OutageWindow>& windows);
std::vector<dtn::OutageWindow> parse_outages(const std::string& text);

}  // namespace deorbit::config
