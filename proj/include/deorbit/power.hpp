#pragma once

// Solar array / Li-ion battery budget through eclipse cycles.

#include <limits>

namespace deorbit::power {

struct PowerConfig {
    double array_w = 7300.0;
    double thruster_w = 6900.0;
    double bus_w = 200.0;
    double capacity_wh = 5700.0;
    double max_dod = 0.8;
    double cycle_life = 1000.0;
    // Charge acceptance limit on sunlit surplus.
    double max_charge_w = 2000.0;
    // Applied to charging energy only; 1 keeps the bookkeeping exact.
    double charge_efficiency = 1.0;
    double initial_soc = 1.0;

    double soc_floor() const { return 1.0 - max_dod; }
    void validate() const;
};

enum class Phase { idle, charging, discharging };

struct BatteryState {
    double soc = 1.0;
    int cycles = 0;
    bool floor_violated = false;
    Phase phase = Phase::idle;
};

/// Signed bus power: positive charges the battery.
double net_power(bool in_eclipse, const PowerConfig& cfg, bool thruster_on = true);

BatteryState battery_step(const BatteryState& state, double net_w, double dt_s, const PowerConfig& cfg);

inline constexpr double kUnboundedMinutes = std::numeric_limits<double>::max();

/// Eclipse time the usable energy sustains at thruster + bus load, minutes.
double eclipse_endurance(const PowerConfig& cfg);

struct EclipseCheck {
    double min_soc = 1.0;
    double final_soc = 1.0;
    bool floor_violated = false;
};

/// Discharge from the initial SoC at a constant load for one eclipse.
EclipseCheck simulate_eclipse(const PowerConfig& cfg, double load_w, double duration_s, double dt_s = 1.0);

/// One discharge cycle per orbit, days.
double cycle_limited_life(const PowerConfig& cfg, double orbit_period_s);

}  // namespace deorbit::power
