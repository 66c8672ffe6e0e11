#include "deorbit/config.hpp"

#include "deorbit/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace deorbit::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_real(const std::string& v) { return io::parse_double(trim(v)); }

std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    for (const auto& item : split(v, ',')) out.push_back(parse_real(item));
    return out;
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + io::num(v[i]);
    return out;
}

// Range checks return an error message or nullptr.
using Check = const char* (*)(double);
const char* any(double) { return nullptr; }
const char* positive(double x) { return x > 0 ? nullptr : "must be > 0"; }
const char* non_negative(double x) { return x >= 0 ? nullptr : "must be >= 0"; }
const char* fraction(double x) { return x > 0 && x <= 1 ? nullptr : "must be in (0, 1]"; }
const char* unit_interval(double x) { return x >= 0 && x <= 1 ? nullptr : "must be in [0, 1]"; }
const char* degrees(double x) { return x >= -180 && x <= 180 ? nullptr : "must be in [-180, 180]"; }
const char* latitude(double x) { return x >= -90 && x <= 90 ? nullptr : "must be in [-90, 90]"; }

template <class Acc>
Field real(const char* sec, const char* key, const char* doc, Acc acc, Check check = any) {
    Field f{sec, key, doc, {}, {}};
    f.get = [acc](const MissionConfig& c) { return io::num(acc(const_cast<MissionConfig&>(c))); };
    f.set = [acc, check](MissionConfig& c, const std::string& v) {
        const double x = parse_real(v);
        if (const char* why = check(x)) throw std::invalid_argument(why);
        acc(c) = x;
    };
    return f;
}

template <class Acc>
Field integer(const char* sec, const char* key, const char* doc, Acc acc, long long min_value) {
    Field f{sec, key, doc, {}, {}};
    f.get = [acc](const MissionConfig& c) { return std::to_string(acc(const_cast<MissionConfig&>(c))); };
    f.set = [acc, min_value](MissionConfig& c, const std::string& v) {
        const std::string t = trim(v);
        using T = std::remove_reference_t<decltype(acc(c))>;
        T x{};
        const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
        if (ec == std::errc::result_out_of_range) throw std::invalid_argument("integer out of range: '" + t + "'");
        if (ec != std::errc{} || end != t.data() + t.size() || t.empty()) {
            throw std::invalid_argument("expected an integer, got '" + t + "'");
        }
        if (static_cast<long double>(x) < min_value) throw std::invalid_argument("must be >= " + std::to_string(min_value));
        acc(c) = x;
    };
    return f;
}

template <class Acc>
Field boolean(const char* sec, const char* key, const char* doc, Acc acc) {
    Field f{sec, key, doc, {}, {}};
    f.get = [acc](const MissionConfig& c) { return acc(const_cast<MissionConfig&>(c)) ? "true" : "false"; };
    f.set = [acc](MissionConfig& c, const std::string& v) {
        const std::string t = trim(v);
        if (t == "true") acc(c) = true;
        else if (t == "false") acc(c) = false;
        else throw std::invalid_argument("expected true or false, got '" + t + "'");
    };
    return f;
}

template <class Acc>
Field text(const char* sec, const char* key, const char* doc, Acc acc) {
    Field f{sec, key, doc, {}, {}};
    f.get = [acc](const MissionConfig& c) { return acc(const_cast<MissionConfig&>(c)); };
    f.set = [acc](MissionConfig& c, const std::string& v) {
        if (trim(v).empty()) throw std::invalid_argument("must not be empty");
        acc(c) = trim(v);
    };
    return f;
}

template <class Acc>
Field vec3(const char* sec, const char* key, const char* doc, Acc acc, bool unit) {
    Field f{sec, key, doc, {}, {}};
    f.get = [acc](const MissionConfig& c) {
        const Vec3& v = acc(const_cast<MissionConfig&>(c));
        return format_list({v.x(), v.y(), v.z()});
    };
    f.set = [acc, unit](MissionConfig& c, const std::string& v) {
        const auto xs = parse_list(v);
        if (xs.size() != 3) throw std::invalid_argument("expected three comma-separated numbers");
        const Vec3 out(xs[0], xs[1], xs[2]);
        if (unit && std::abs(out.norm() - 1.0) > 1e-9) throw std::invalid_argument("must be a unit vector");
        acc(c) = out;
    };
    return f;
}

template <class Acc>
Field list(const char* sec, const char* key, const char* doc, Acc acc, std::size_t required) {
    Field f{sec, key, doc, {}, {}};
    f.get = [acc](const MissionConfig& c) { return format_list(acc(const_cast<MissionConfig&>(c))); };
    f.set = [acc, required](MissionConfig& c, const std::string& v) {
        auto xs = parse_list(v);
        if (required > 0 && !xs.empty() && xs.size() != required) {
            throw std::invalid_argument("expected " + std::to_string(required) + " numbers or nothing");
        }
        acc(c) = std::move(xs);
    };
    return f;
}

template <class Acc>
Field priority(const char* sec, const char* key, const char* doc, Acc acc) {
    Field f{sec, key, doc, {}, {}};
    f.get = [acc](const MissionConfig& c) { return dtn::to_string(acc(const_cast<MissionConfig&>(c))); };
    f.set = [acc](MissionConfig& c, const std::string& v) { acc(c) = dtn::priority_from_string(trim(v)); };
    return f;
}

// One link's parametric, budget and rate-table keys under a prefix.
void add_link(std::vector<Field>& r, const char* prefix, dtn::LinkModel DtnSection::*link) {
    auto key = [prefix](const char* k) { return std::string(prefix) + "_" + k; };
    auto L = [link](MissionConfig& c) -> dtn::LinkModel& { return c.dtn.*link; };
    auto mk = [&](Field f, const std::string& k) {
        f.key = k;
        r.push_back(std::move(f));
    };
    mk(real("dtn", "", "mean SNR, dB", [L](MissionConfig& c) -> double& { return L(c).parametric.mean_db; }),
       key("mean_snr_db"));
    mk(real("dtn", "", "SNR sinusoid amplitude, dB",
            [L](MissionConfig& c) -> double& { return L(c).parametric.amplitude_db; }, non_negative),
       key("amplitude_db"));
    mk(real("dtn", "", "SNR sinusoid period, s",
            [L](MissionConfig& c) -> double& { return L(c).parametric.period_s; }, positive),
       key("period_s"));
    mk(real("dtn", "", "SNR sinusoid phase, s", [L](MissionConfig& c) -> double& { return L(c).parametric.phase_s; }),
       key("phase_s"));
    {
        Field f{"dtn", key("outages"), "outage windows start:duration;... (s)", {}, {}};
        f.get = [L](const MissionConfig& c) { return format_outages(L(const_cast<MissionConfig&>(c)).parametric.outages); };
        f.set = [L](MissionConfig& c, const std::string& v) { L(c).parametric.outages = parse_outages(v); };
        r.push_back(f);
    }
    mk(real("dtn", "", "SNR reported during outages, dB",
            [L](MissionConfig& c) -> double& { return L(c).parametric.outage_snr_db; }),
       key("outage_snr_db"));
    {
        Field f{"dtn", key("rate_table"), "min SNR dB:bytes per s, ascending", {}, {}};
        f.get = [L](const MissionConfig& c) { return format_rate_table(L(const_cast<MissionConfig&>(c)).rate_table); };
        f.set = [L](MissionConfig& c, const std::string& v) { L(c).rate_table = parse_rate_table(v); };
        r.push_back(f);
    }
    mk(real("dtn", "", "transmit power, dBW", [L](MissionConfig& c) -> double& { return L(c).budget.tx_power_dbw; }),
       key("tx_power_dbw"));
    mk(real("dtn", "", "transmit antenna gain, dB", [L](MissionConfig& c) -> double& { return L(c).budget.tx_gain_db; }),
       key("tx_gain_db"));
    mk(real("dtn", "", "receive antenna gain, dB", [L](MissionConfig& c) -> double& { return L(c).budget.rx_gain_db; }),
       key("rx_gain_db"));
    mk(real("dtn", "", "free-space loss constant (dB at 1 km)",
            [L](MissionConfig& c) -> double& { return L(c).budget.fspl_constant_db; }),
       key("fspl_constant_db"));
    mk(real("dtn", "", "receiver noise power, dBW", [L](MissionConfig& c) -> double& { return L(c).budget.noise_dbw; }),
       key("noise_dbw"));
}

void add_flow(std::vector<Field>& r, const char* prefix, dtn::Flow DtnSection::*flow) {
    auto key = [prefix](const char* k) { return std::string(prefix) + "_" + k; };
    auto F = [flow](MissionConfig& c) -> dtn::Flow& { return c.dtn.*flow; };
    Field f = priority("dtn", "", "priority class", [F](MissionConfig& c) -> dtn::Priority& { return F(c).priority; });
    f.key = key("priority");
    r.push_back(f);
    f = real("dtn", "", "mean generation interval, s", [F](MissionConfig& c) -> double& { return F(c).interval_s; },
             positive);
    f.key = key("interval_s");
    r.push_back(f);
    f = integer("dtn", "", "bundle size, bytes", [F](MissionConfig& c) -> std::uint64_t& { return F(c).size_bytes; }, 1);
    f.key = key("size_b");
    r.push_back(f);
    f = real("dtn", "", "first generation time, s", [F](MissionConfig& c) -> double& { return F(c).phase_s; },
             non_negative);
    f.key = key("phase_s");
    r.push_back(f);
}

std::vector<Field> build_registry() {
    std::vector<Field> r;
    using C = MissionConfig;
#define REF(type, expr) [](C & c) -> type& { return expr; }

    // [orbital]
    r.push_back(real("orbital", "initial_altitude_km", "start altitude, km", REF(double, c.orbital.initial_altitude_km), positive));
    r.push_back(real("orbital", "final_altitude_km", "target altitude, km", REF(double, c.orbital.final_altitude_km), positive));
    r.push_back(real("orbital", "thrust_n", "thruster force, N", REF(double, c.orbital.thrust.thrust_n), positive));
    r.push_back(real("orbital", "isp_s", "specific impulse, s", REF(double, c.orbital.thrust.isp_s), positive));
    {
        Field f{"orbital", "thrust_mode", "retrograde | prograde | inertial-fixed | off", {}, {}};
        f.get = [](const C& c) { return orbit::to_string(c.orbital.thrust.mode); };
        f.set = [](C& c, const std::string& v) { c.orbital.thrust.mode = orbit::thrust_mode_from_string(trim(v)); };
        r.push_back(f);
    }
    r.push_back(real("orbital", "cross_track_offset_deg", "nominal thrust tilt toward the orbit normal, deg",
                     REF(double, c.orbital.thrust.cross_track_offset_deg), degrees));
    r.push_back(vec3("orbital", "inertial_direction", "thrust direction for inertial-fixed mode",
                     REF(Vec3, c.orbital.thrust.inertial_direction), false));
    r.push_back(real("orbital", "dry_mass_kg", "module dry mass, kg", REF(double, c.orbital.dry_mass_kg), positive));
    r.push_back(real("orbital", "propellant_kg", "xenon load, kg", REF(double, c.orbital.propellant_kg), non_negative));
    r.push_back(real("orbital", "payload_kg", "captured debris mass, kg", REF(double, c.orbital.payload_kg), non_negative));
    r.push_back(real("orbital", "inclination_deg", "orbit inclination, deg", REF(double, c.orbital.inclination_deg), degrees));
    r.push_back(real("orbital", "dt_s", "integration step, s", REF(double, c.orbital.dt_s), positive));
    r.push_back(real("orbital", "sample_interval_s", "trajectory output interval, s", REF(double, c.orbital.sample_interval_s), positive));
    r.push_back(real("orbital", "max_duration_days", "run cut-off, days", REF(double, c.orbital.max_duration_days), positive));
    r.push_back(real("orbital", "epoch_mjd", "plot time origin, MJD", REF(double, c.orbital.epoch_mjd)));
    r.push_back(real("orbital", "mu_km3s2", "gravitational parameter, km^3/s^2", REF(double, c.orbital.constants.mu_km3s2), positive));
    r.push_back(real("orbital", "earth_radius_km", "Earth radius, km", REF(double, c.orbital.constants.earth_radius_km), positive));
    r.push_back(real("orbital", "g0_ms2", "standard gravity, m/s^2", REF(double, c.orbital.constants.g0_ms2), positive));
    r.push_back(vec3("orbital", "sun_direction", "unit vector toward the Sun (ECI)", REF(Vec3, c.orbital.constants.sun_direction), true));
    r.push_back(boolean("orbital", "drag_enabled", "exponential-atmosphere drag", REF(bool, c.orbital.constants.drag.enabled)));
    r.push_back(real("orbital", "drag_area_m2", "drag reference area, m^2", REF(double, c.orbital.constants.drag.area_m2), positive));
    r.push_back(real("orbital", "drag_coefficient", "drag coefficient", REF(double, c.orbital.constants.drag.drag_coefficient), positive));
    r.push_back(real("orbital", "drag_reference_density_kgm3", "density at the reference altitude, kg/m^3",
                     REF(double, c.orbital.constants.drag.reference_density_kgm3), positive));
    r.push_back(real("orbital", "drag_reference_altitude_km", "reference altitude, km",
                     REF(double, c.orbital.constants.drag.reference_altitude_km), non_negative));
    r.push_back(real("orbital", "drag_scale_height_km", "density scale height, km",
                     REF(double, c.orbital.constants.drag.scale_height_km), positive));

    // [power]
    r.push_back(real("power", "array_w", "sunlit array output, W", REF(double, c.power.battery.array_w), non_negative));
    r.push_back(real("power", "thruster_w", "thruster draw, W", REF(double, c.power.battery.thruster_w), non_negative));
    r.push_back(real("power", "bus_w", "housekeeping load, W", REF(double, c.power.battery.bus_w), non_negative));
    r.push_back(real("power", "capacity_wh", "battery capacity, Wh", REF(double, c.power.battery.capacity_wh), positive));
    r.push_back(real("power", "max_dod", "maximum depth of discharge", REF(double, c.power.battery.max_dod), fraction));
    r.push_back(real("power", "cycle_life", "rated discharge cycles", REF(double, c.power.battery.cycle_life), non_negative));
    r.push_back(real("power", "max_charge_w", "charge acceptance limit, W", REF(double, c.power.battery.max_charge_w), non_negative));
    r.push_back(real("power", "charge_efficiency", "charging efficiency", REF(double, c.power.battery.charge_efficiency), fraction));
    r.push_back(real("power", "initial_soc", "state of charge at start", REF(double, c.power.battery.initial_soc), unit_interval));
    r.push_back(boolean("power", "gate_thrust", "switch the thruster off in eclipse at the SoC floor", REF(bool, c.power.gate_thrust)));
    r.push_back(real("power", "bus_reserve_min", "bus energy kept above the floor, minutes", REF(double, c.power.bus_reserve_min), non_negative));
    r.push_back(real("power", "check_load_w", "eclipse sizing check load, W", REF(double, c.power.check_load_w), non_negative));
    r.push_back(real("power", "check_eclipse_min", "eclipse sizing check duration, min", REF(double, c.power.check_eclipse_min), non_negative));

    // [nav]
    r.push_back(real("nav", "chief_altitude_km", "chief circular altitude, km", REF(double, c.nav.filter.chief_altitude_km), positive));
    r.push_back(real("nav", "mean_motion_rad_s", "CW mean motion, rad/s (0 derives it)", REF(double, c.nav.filter.mean_motion_rad_s), non_negative));
    r.push_back(real("nav", "sigma_range_m", "range noise, m", REF(double, c.nav.filter.sigma_range_m), positive));
    r.push_back(real("nav", "sigma_angle_rad", "angle noise, rad", REF(double, c.nav.filter.sigma_angle_rad), positive));
    r.push_back(real("nav", "q_proximity", "process noise PSD, proximity runs, m^2/s^3", REF(double, c.nav.q_proximity), non_negative));
    r.push_back(real("nav", "q_longduration", "process noise PSD, thrusting runs, m^2/s^3", REF(double, c.nav.q_longduration), non_negative));
    r.push_back(real("nav", "filter_step_s", "filter and radar period, s", REF(double, c.nav.filter.filter_step_s), positive));
    r.push_back(real("nav", "truth_step_s", "truth integration step, s", REF(double, c.nav.filter.truth_step_s), positive));
    r.push_back(real("nav", "thrust_n", "chaser thrust in long-duration runs, N", REF(double, c.nav.filter.thrust_n), non_negative));
    r.push_back(vec3("nav", "thrust_direction", "chaser thrust direction, LVLH unit vector with x = 0",
                     REF(Vec3, c.nav.filter.thrust_direction), true));
    r.push_back(real("nav", "chaser_mass_kg", "chaser mass, kg", REF(double, c.nav.filter.chaser_mass_kg), positive));
    r.push_back(real("nav", "chaser_isp_s", "chaser specific impulse, s", REF(double, c.nav.filter.chaser_isp_s), positive));
    r.push_back(real("nav", "init_sigma_position_m", "initial position sigma, m", REF(double, c.nav.filter.init_sigma_position_m), non_negative));
    r.push_back(real("nav", "init_sigma_velocity_ms", "initial velocity sigma, m/s", REF(double, c.nav.filter.init_sigma_velocity_ms), non_negative));
    r.push_back(boolean("nav", "measurement_noise", "add radar noise", REF(bool, c.nav.filter.measurement_noise)));
    r.push_back(boolean("nav", "initial_error", "draw the initial estimate from the initial covariance", REF(bool, c.nav.filter.initial_error)));
    r.push_back(real("nav", "proximity_duration_s", "proximity run length, s", REF(double, c.nav.proximity_duration_s), positive));
    r.push_back(real("nav", "longduration_duration_s", "long-duration run length, s", REF(double, c.nav.longduration_duration_s), positive));
    r.push_back(integer("nav", "seeds", "Monte Carlo seeds per scenario", REF(int, c.nav.seeds), 1));
    r.push_back(list("nav", "proximity_start", "x,y,z,vx,vy,vz in LVLH (m, m/s); empty = built-in", REF(std::vector<double>, c.nav.proximity_start), 6));
    r.push_back(list("nav", "longduration_start", "x,y,z,vx,vy,vz in LVLH (m, m/s); empty = built-in", REF(std::vector<double>, c.nav.longduration_start), 6));

    // [dtn]
    r.push_back(real("dtn", "duration_s", "traffic generation window, s", REF(double, c.dtn.duration_s), positive));
    r.push_back(real("dtn", "drain_s", "extra time for queues to drain, s", REF(double, c.dtn.drain_s), non_negative));
    r.push_back(real("dtn", "rate_grid_s", "SNR sampling grid, s", REF(double, c.dtn.rate_grid_s), positive));
    r.push_back(real("dtn", "throughput_sample_s", "throughput averaging window, s", REF(double, c.dtn.throughput_sample_s), positive));
    r.push_back(integer("dtn", "capacity_primary_b", "Primary buffer, bytes (0 = unlimited)", REF(std::uint64_t, c.dtn.capacity_primary_b), 0));
    r.push_back(integer("dtn", "capacity_relay_b", "Relay buffer, bytes (0 = unlimited)", REF(std::uint64_t, c.dtn.capacity_relay_b), 0));
    r.push_back(integer("dtn", "capacity_ground_b", "Ground buffer, bytes (0 = unlimited)", REF(std::uint64_t, c.dtn.capacity_ground_b), 0));
    add_link(r, "pr", &DtnSection::primary_relay);
    add_link(r, "rg", &DtnSection::relay_ground);
    add_flow(r, "safety", &DtnSection::safety);
    add_flow(r, "metadata", &DtnSection::metadata);
    add_flow(r, "bulk", &DtnSection::bulk);
    r.push_back(boolean("dtn", "poisson", "exponential inter-arrival times", REF(bool, c.dtn.poisson)));
    r.push_back(real("dtn", "histogram_bin_s", "latency histogram bin width, s", REF(double, c.dtn.histogram_bin_s), positive));
    r.push_back(list("dtn", "histogram_horizons_s", "one latency histogram per horizon, s", REF(std::vector<double>, c.dtn.histogram_horizons_s), 0));
    r.push_back(real("dtn", "relay_altitude_km", "relay circular altitude, km", REF(double, c.dtn.relay_altitude_km), positive));
    r.push_back(real("dtn", "relay_inclination_deg", "relay inclination, deg", REF(double, c.dtn.relay_inclination_deg), degrees));
    r.push_back(real("dtn", "relay_phase_deg", "relay initial phase, deg", REF(double, c.dtn.relay_phase_deg), degrees));
    r.push_back(real("dtn", "ground_lat_deg", "ground station latitude, deg", REF(double, c.dtn.ground_lat_deg), latitude));
    r.push_back(real("dtn", "ground_lon_deg", "ground station longitude, deg", REF(double, c.dtn.ground_lon_deg), degrees));
    r.push_back(real("dtn", "min_elevation_deg", "ground elevation mask, deg", REF(double, c.dtn.min_elevation_deg), latitude));

    // [avoidance]
    r.push_back(real("avoidance", "horizon_s", "screening window, s", REF(double, c.avoidance.policy.horizon_s), positive));
    r.push_back(real("avoidance", "trigger_km", "miss distance that triggers an evasion, km", REF(double, c.avoidance.policy.trigger_km), positive));
    r.push_back(real("avoidance", "clearance_km", "required miss distance after evasion, km", REF(double, c.avoidance.policy.clearance_km), positive));
    r.push_back(real("avoidance", "offset_deg", "evasion thrust tilt toward the orbit normal, deg", REF(double, c.avoidance.policy.offset_deg), degrees));
    r.push_back(real("avoidance", "thrust_fraction", "evasion thrust as a fraction of nominal", REF(double, c.avoidance.policy.thrust_fraction), fraction));
    r.push_back(real("avoidance", "detection_range_km", "sensor range gate, km", REF(double, c.avoidance.policy.detection_range_km), positive));
    r.push_back(integer("avoidance", "intruders", "scripted intruders (0 or 1)", REF(int, c.avoidance.intruders), 0));
    r.push_back(text("avoidance", "intruder_id", "intruder name", REF(std::string, c.avoidance.intruder_id)));
    r.push_back(real("avoidance", "intruder_tca_s", "epoch at which the intruder meets the nominal path, s", REF(double, c.avoidance.intruder_tca_s), positive));
    r.push_back(real("avoidance", "intruder_miss_km", "radial offset of the intruder at that epoch, km", REF(double, c.avoidance.intruder_miss_km), non_negative));

    // [run]
    r.push_back(integer("run", "seed", "base random seed", REF(std::uint64_t, c.run.seed), 0));
    r.push_back(text("run", "output_dir", "default output directory", REF(std::string, c.run.output_dir)));

    // [acceptance]
    r.push_back(real("acceptance", "deorbit_days_min", "deorbit duration band, days", REF(double, c.acceptance.deorbit_days_min), positive));
    r.push_back(real("acceptance", "deorbit_days_max", "deorbit duration band, days", REF(double, c.acceptance.deorbit_days_max), positive));
    r.push_back(real("acceptance", "propellant_min_kg", "propellant band, kg", REF(double, c.acceptance.propellant_min_kg), non_negative));
    r.push_back(real("acceptance", "propellant_max_kg", "propellant band, kg", REF(double, c.acceptance.propellant_max_kg), positive));
    r.push_back(real("acceptance", "decay_r2_min", "minimum R^2 of the linear decay fit", REF(double, c.acceptance.decay_r2_min), unit_interval));
    r.push_back(real("acceptance", "decay_middle_fraction", "share of orbits used in the decay fit", REF(double, c.acceptance.decay_middle_fraction), fraction));
    r.push_back(real("acceptance", "proximity_position_rmse_max_m", "proximity position RMSE bound, m", REF(double, c.acceptance.proximity_position_rmse_max_m), positive));
    r.push_back(real("acceptance", "proximity_velocity_rmse_max_ms", "proximity velocity RMSE bound, m/s", REF(double, c.acceptance.proximity_velocity_rmse_max_ms), positive));
    r.push_back(integer("acceptance", "proximity_min_passing", "seeds that must meet both RMSE bounds", REF(int, c.acceptance.proximity_min_passing), 0));
    r.push_back(real("acceptance", "nees_confidence", "two-sided chi-square band for mean NEES", REF(double, c.acceptance.nees_confidence), fraction));
    r.push_back(real("acceptance", "longduration_rmse_min_m", "cw-only RMSE band, m", REF(double, c.acceptance.longduration_rmse_min_m), non_negative));
    r.push_back(real("acceptance", "longduration_rmse_max_m", "cw-only RMSE band, m", REF(double, c.acceptance.longduration_rmse_max_m), positive));
    r.push_back(real("acceptance", "dtn_latency_s", "prompt-delivery latency, s", REF(double, c.acceptance.dtn_latency_s), positive));
    r.push_back(real("acceptance", "dtn_within_min", "prompt-delivery fraction band", REF(double, c.acceptance.dtn_within_min), unit_interval));
    r.push_back(real("acceptance", "dtn_within_max", "prompt-delivery fraction band", REF(double, c.acceptance.dtn_within_max), unit_interval));
    r.push_back(real("acceptance", "dtn_tail_min_s", "outage latency band, s", REF(double, c.acceptance.dtn_tail_min_s), non_negative));
    r.push_back(real("acceptance", "dtn_tail_max_s", "outage latency band, s", REF(double, c.acceptance.dtn_tail_max_s), positive));
    r.push_back(real("acceptance", "relay_backlog_target_b", "expected relay backlog peak, bytes", REF(double, c.acceptance.relay_backlog_target_b), positive));
    r.push_back(real("acceptance", "relay_backlog_factor", "allowed factor around the backlog target", REF(double, c.acceptance.relay_backlog_factor), positive));
#undef REF
    return r;
}

}  // namespace

DtnSection::DtnSection() {
    primary_relay.name = "primary-relay";
    primary_relay.from = 0;
    primary_relay.to = 1;
    primary_relay.parametric = {20.5, 4.5, 6000.0, 0.0, {{9300.0, 1700.0}}, -10.0};
    primary_relay.rate_table = {{16.0, 12000.0}, {19.0, 24000.0}, {22.0, 36000.0}, {24.0, 48000.0}};

    relay_ground.name = "relay-ground";
    relay_ground.from = 1;
    relay_ground.to = 2;
    relay_ground.parametric = {34.0, 4.0, 5400.0, 0.0, {}, -10.0};
    for (double s = 1800.0; s < 22200.0; s += 1800.0) relay_ground.parametric.outages.push_back({s, 40.0});
    relay_ground.rate_table = {{30.0, 35000.0}, {32.0, 45000.0}, {34.0, 55000.0}, {36.0, 65000.0}};
    // Higher-gain ground dish so the 1400 km relay closes the 30 dB step.
    relay_ground.budget.rx_gain_db = 35.0;

    safety = {dtn::Priority::safety_critical, 1.0, 100, 0.0, false};
    metadata = {dtn::Priority::metadata, 10.0, 1000, 0.5, false};
    bulk = {dtn::Priority::bulk, 120.0, 50000, 0.25, false};
}

dtn::Topology DtnSection::topology() const {
    dtn::Topology t;
    t.node_names = {"Primary", "Relay", "Ground"};
    t.links = {primary_relay, relay_ground};
    t.capacity_bytes = {capacity_primary_b, capacity_relay_b, capacity_ground_b};
    return t;
}

dtn::TrafficModel DtnSection::traffic() const {
    dtn::TrafficModel tr;
    tr.flows = {safety, metadata, bulk};
    for (auto& f : tr.flows) f.poisson = poisson;
    tr.source = 0;
    tr.destination = 2;
    return tr;
}

dtn::DtnRunSpec DtnSection::run_spec(std::uint64_t seed) const {
    dtn::DtnRunSpec s;
    s.duration_s = duration_s;
    s.drain_s = drain_s;
    s.rate_grid_s = rate_grid_s;
    s.throughput_sample_s = throughput_sample_s;
    s.seed = seed;
    return s;
}

MissionConfig::MissionConfig() {
    nav.filter.thrust_n = 0.3;
}

void MissionConfig::validate() const {
    auto guard = [](const char* section, const auto& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("[") + section + "] " + e.what(), section);
        }
    };
    guard("orbital", [&] { orbital.validate(); });
    guard("power", [&] { power.battery.validate(); });
    guard("nav", [&] { nav.filter.validate(); });
    guard("dtn", [&] {
        dtn.topology().validate(0, 2);
        dtn.traffic().validate();
    });
    guard("avoidance", [&] {
        avoidance.policy.validate();
        if (avoidance.intruders > 1) throw std::invalid_argument("at most one scripted intruder is supported");
    });
    guard("acceptance", [&] {
        const auto& a = acceptance;
        if (a.deorbit_days_min > a.deorbit_days_max || a.propellant_min_kg > a.propellant_max_kg ||
            a.longduration_rmse_min_m > a.longduration_rmse_max_m || a.dtn_within_min > a.dtn_within_max ||
            a.dtn_tail_min_s > a.dtn_tail_max_s) {
            throw std::invalid_argument("band minimum exceeds maximum");
        }
        if (a.relay_backlog_factor < 1) throw std::invalid_argument("relay_backlog_factor must be >= 1");
    });
}

const std::vector<Field>& registry() {
    static const std::vector<Field> r = build_registry();
    return r;
}

void apply_config(MissionConfig& cfg, const std::string& text, const std::string& origin) {
    std::map<std::pair<std::string, std::string>, const Field*> index;
    std::map<std::string, bool> sections;
    for (const auto& f : registry()) {
        index[{f.section, f.key}] = &f;
        sections[f.section] = true;
    }

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    std::map<std::pair<std::string, std::string>, int> seen;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string l = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (l.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line);
        if (l.front() == '[') {
            if (l.back() != ']') throw ConfigError(where + ": malformed section header '" + l + "'", "", line);
            section = trim(l.substr(1, l.size() - 2));
            if (!sections.count(section)) throw ConfigError(where + ": unknown section [" + section + "]", section, line);
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'", "", line);
        const std::string key = trim(l.substr(0, eq));
        const std::string value = trim(l.substr(eq + 1));
        if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside any section", key, line);
        const auto it = index.find({section, key});
        if (it == index.end()) {
            throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]", key, line);
        }
        if (auto prev = seen.find({section, key}); prev != seen.end()) {
            throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                                  std::to_string(prev->second) + ")",
                              key, line);
        }
        seen[{section, key}] = line;
        try {
            it->second->set(cfg, value);
        } catch (const std::exception& e) {
            throw ConfigError(where + ": [" + section + "] " + key + " = " + value + ": " + e.what(), key, line);
        }
    }
}

MissionConfig parse_config(const std::string& text, const std::string& origin) {
    MissionConfig cfg;
    apply_config(cfg, text, origin);
    cfg.validate();
    return cfg;
}

MissionConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string echo_config(const MissionConfig& cfg) {
    std::ostringstream out;
    out << "# Effective configuration; every key is listed.\n";
    std::string section;
    for (const auto& f : registry()) {
        if (f.section != section) {
            out << "\n[" << f.section << "]\n";
            section = f.section;
        }
        out << f.key << " = " << f.get(cfg) << "\n";
    }
    return out.str();
}

std::string format_rate_table(const std::vector<dtn::RateStep>& table) {
    std::string out;
    for (std::size_t i = 0; i < table.size(); ++i) {
        out += (i ? "," : "") + io::num(table[i].min_snr_db) + ":" + io::num(table[i].bytes_per_s);
    }
    return out;
}

std::vector<dtn::RateStep> parse_rate_table(const std::string& text) {
    std::vector<dtn::RateStep> out;
    for (const auto& item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("rate table entries are snr:rate, got '" + item + "'");
        out.push_back({parse_real(item.substr(0, colon)), parse_real(item.substr(colon + 1))});
    }
    if (out.empty()) throw std::invalid_argument("rate table must not be empty");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i].bytes_per_s > 0)) throw std::invalid_argument("rates must be > 0");
        if (i > 0 && !(out[i].min_snr_db > out[i - 1].min_snr_db && out[i].bytes_per_s > out[i - 1].bytes_per_s)) {
            throw std::invalid_argument("rate table must increase in SNR and rate");
        }
    }
    return out;
}

std::string format_outages(const std::vector<dtn::OutageWindow>& windows) {
    std::string out;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        out += (i ? ";" : "") + io::num(windows[i].start_s) + ":" + io::num(windows[i].duration_s);
    }
    return out;
}

std::vector<dtn::OutageWindow> parse_outages(const std::string& text) {
    std::vector<dtn::OutageWindow> out;
    if (trim(text).empty()) return out;
    for (const auto& item : split(text, ';')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("outages are start:duration, got '" + item + "'");
        const dtn::OutageWindow w{parse_real(item.substr(0, colon)), parse_real(item.substr(colon + 1))};
        if (!(w.start_s >= 0) || !(w.duration_s > 0)) throw std::invalid_argument("outage needs start >= 0 and duration > 0");
        out.push_back(w);
    }
    return out;
}

}  // namespace deorbit::config
