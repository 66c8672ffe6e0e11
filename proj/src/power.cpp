#include "deorbit/power.hpp"

#include <algorithm>
#include <stdexcept>

namespace deorbit::power {

void PowerConfig::validate() const {
    if (!(max_dod > 0 && max_dod <= 1)) throw std::invalid_argument("max_dod must be in (0, 1]");
    if (!(array_w >= 0 && thruster_w >= 0 && bus_w >= 0 && max_charge_w >= 0)) {
        throw std::invalid_argument("power levels must be >= 0");
    }
    if (!(capacity_wh > 0)) throw std::invalid_argument("battery capacity must be > 0");
    if (!(cycle_life >= 0)) throw std::invalid_argument("cycle life must be >= 0");
    if (!(charge_efficiency > 0 && charge_efficiency <= 1)) {
        throw std::invalid_argument("charge efficiency must be in (0, 1]");
    }
    if (!(initial_soc >= soc_floor() && initial_soc <= 1)) {
        throw std::invalid_argument("initial SoC must lie in [1 - max_dod, 1]");
    }
}

double net_power(bool in_eclipse, const PowerConfig& cfg, bool thruster_on) {
    const double load = (thruster_on ? cfg.thruster_w : 0.0) + cfg.bus_w;
    return in_eclipse ? -load : cfg.array_w - load;
}

BatteryState battery_step(const BatteryState& state, double net_w, double dt_s, const PowerConfig& cfg) {
    if (!(dt_s > 0)) throw std::invalid_argument("battery_step: dt must be > 0");
    if (net_w == 0.0) return state;

    BatteryState next = state;
    double energy_wh = 0.0;
    if (net_w > 0) {
        energy_wh = std::min(net_w, cfg.max_charge_w) * cfg.charge_efficiency * dt_s / 3600.0;
        // A discharge followed by a recharge completes one cycle.
        if (state.phase == Phase::discharging) ++next.cycles;
        next.phase = Phase::charging;
    } else {
        energy_wh = net_w * dt_s / 3600.0;
        next.phase = Phase::discharging;
    }

    const double floor = cfg.soc_floor();
    double soc = state.soc + energy_wh / cfg.capacity_wh;
    if (soc < floor) {
        soc = floor;
        next.floor_violated = true;
    }
    next.soc = std::min(soc, 1.0);
    return next;
}

double eclipse_endurance(const PowerConfig& cfg) {
    const double load = cfg.thruster_w + cfg.bus_w;
    if (!(load > 0)) return kUnboundedMinutes;
    return cfg.capacity_wh * cfg.max_dod / load * 60.0;
}

EclipseCheck simulate_eclipse(const PowerConfig& cfg, double load_w, double duration_s, double dt_s) {
    cfg.validate();
    if (!(load_w >= 0) || !(duration_s >= 0)) throw std::invalid_argument("simulate_eclipse: load and duration must be >= 0");
    BatteryState st;
    st.soc = cfg.initial_soc;
    EclipseCheck out{st.soc, st.soc, false};
    for (double t = 0.0; t < duration_s; t += dt_s) {
        st = battery_step(st, -load_w, std::min(dt_s, duration_s - t), cfg);
        out.min_soc = std::min(out.min_soc, st.soc);
    }
    out.final_soc = st.soc;
    out.floor_violated = st.floor_violated;
    return out;
}

double cycle_limited_life(const PowerConfig& cfg, double orbit_period_s) {
    if (!(orbit_period_s > 0)) throw std::invalid_argument("orbit period must be > 0");
    return cfg.cycle_life * orbit_period_s / 86400.0;
}

}  // namespace deorbit::power
