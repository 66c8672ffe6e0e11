#include "deorbit/scenarios.hpp"

#include "deorbit/csv.hpp"
#include "deorbit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace deorbit::scenario {

namespace fs = std::filesystem;
using io::CsvWriter;
using io::num;

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"deorbit",  "proximity-nav", "longduration-nav",
                                                "dtn",      "avoidance",     "full-mission"};
    return names;
}

namespace {

constexpr double kEarthRotation = 7.292115e-5;  // rad/s

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    fs::path path(const std::string& name) {
        files_.push_back(name);
        return dir_ / name;
    }
    const std::vector<fs::path>& files() const { return files_; }

    void plot(const std::string& name, const std::vector<plot::Series>& series, const plot::PlotSpec& spec) {
        plot::emit_plot(series, spec, path(name));
    }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
};

plot::PlotSpec spec(const std::string& title, const std::string& x, const std::string& y,
                    plot::Style style = plot::Style::line) {
    plot::PlotSpec s;
    s.title = title;
    s.x_label = x;
    s.y_label = y;
    s.style = style;
    return s;
}

void write_trajectory(Outputs& out, const std::vector<orbit::TrajectorySample>& samples,
                      const std::vector<std::string>& comments) {
    CsvWriter w(out.path("trajectory.csv"),
                {"t_s", "x_km", "y_km", "z_km", "vx_kms", "vy_kms", "vz_kms", "mass_kg", "alt_km", "eclipse"});
    for (const auto& c : comments) w.comment(c);
    for (const auto& s : samples) {
        w.row({num(s.t_s), num(s.position_km.x()), num(s.position_km.y()), num(s.position_km.z()),
               num(s.velocity_kms.x()), num(s.velocity_kms.y()), num(s.velocity_kms.z()), num(s.mass_kg),
               num(s.altitude_km), s.eclipse ? "1" : "0"});
    }
    w.close();
}

void plot_altitude(Outputs& out, const std::vector<orbit::TrajectorySample>& samples, double epoch_mjd) {
    plot::Series alt{"altitude", {}, {}}, rmag{"", {}, {}};
    for (const auto& s : samples) {
        alt.x.push_back(epoch_mjd + s.t_s / kSecondsPerDay);
        alt.y.push_back(s.altitude_km);
        rmag.x.push_back(alt.x.back());
        rmag.y.push_back(s.position_km.norm());
    }
    out.plot("altitude.svg", {alt}, spec("Altitude during deorbit", "time (TAI MJD)", "altitude (km)"));
    out.plot("rmag.svg", {rmag}, spec("Radial distance from Earth centre", "time (TAI MJD)", "RMAG (km)"));
}

void write_orbit_means(Outputs& out, const std::vector<orbit::TrajectorySample>& samples) {
    const auto means = orbit::per_orbit_mean_altitude(samples);
    CsvWriter w(out.path("orbit_means.csv"), {"orbit", "t_mid_s", "mean_altitude_km"});
    for (std::size_t i = 0; i < means.size(); ++i) {
        w.row({num(static_cast<std::int64_t>(i + 1)), num(means[i].t_mid_s), num(means[i].mean_altitude_km)});
    }
    w.close();
}

// ---------------------------------------------------------------------------

void run_deorbit_scenario(const config::MissionConfig& cfg, Outputs& out) {
    const auto& o = cfg.orbital;
    const auto r = orbit::run_deorbit(o.initial_altitude_km, o.final_altitude_km, o);
    write_trajectory(out, r.samples,
                     {"termination = " + orbit::to_string(r.termination),
                      "edelbaum_s = " + num(orbit::edelbaum_estimate(o.initial_altitude_km, o.final_altitude_km,
                                                                      o.thrust.thrust_n, o.initial_mass_kg(),
                                                                      o.constants))});
    write_orbit_means(out, r.samples);
    plot_altitude(out, r.samples, o.epoch_mjd);
}

nav::LvlhState start_from(const std::vector<double>& v, const nav::LvlhState& fallback) {
    if (v.empty()) return fallback;
    nav::LvlhState s;
    s.position_m = Vec3(v[0], v[1], v[2]);
    s.velocity_ms = Vec3(v[3], v[4], v[5]);
    return s;
}

void write_nav_series(Outputs& out, const std::string& name, const nav::NavResult& r) {
    CsvWriter w(out.path(name), {"t_s", "ex_m", "ey_m", "ez_m", "evx_ms", "evy_ms", "evz_ms", "p3s_x", "p3s_y",
                                 "p3s_z", "nees"});
    for (const auto& s : r.samples) {
        w.row({num(s.t_s), num(s.position_error_m.x()), num(s.position_error_m.y()), num(s.position_error_m.z()),
               num(s.velocity_error_ms.x()), num(s.velocity_error_ms.y()), num(s.velocity_error_ms.z()),
               num(s.position_3sigma_m.x()), num(s.position_3sigma_m.y()), num(s.position_3sigma_m.z()),
               num(s.nees)});
    }
    w.comment("position_rmse_m = " + num(r.position_rmse_m));
    w.comment("velocity_rmse_ms = " + num(r.velocity_rmse_ms));
    w.comment("max_position_error_m = " + num(r.max_position_error_m));
    w.comment("mean_nees = " + num(r.mean_nees));
    w.close();
}

void plot_nav_errors(Outputs& out, const std::string& name, const std::string& title, const nav::NavResult& r) {
    plot::Series ex{"x error", {}, {}}, ey{"y error", {}, {}}, ez{"z error", {}, {}};
    plot::Series sp{"+3 sigma (y)", {}, {}}, sm{"-3 sigma (y)", {}, {}};
    for (const auto& s : r.samples) {
        for (auto* p : {&ex, &ey, &ez, &sp, &sm}) p->x.push_back(s.t_s);
        ex.y.push_back(s.position_error_m.x());
        ey.y.push_back(s.position_error_m.y());
        ez.y.push_back(s.position_error_m.z());
        sp.y.push_back(s.position_3sigma_m.y());
        sm.y.push_back(-s.position_3sigma_m.y());
    }
    out.plot(name, {ex, ey, ez, sp, sm}, spec(title, "time (s)", "position error (m)"));
}

nav::NavRunSpec proximity_spec(const config::MissionConfig& cfg, const nav::NavConfig& nc, std::uint64_t seed) {
    nav::NavRunSpec s;
    s.initial_relative =
        start_from(cfg.nav.proximity_start, nav::default_proximity_start(nc.mean_motion(cfg.orbital.constants)));
    s.duration_s = cfg.nav.proximity_duration_s;
    s.seed = seed;
    s.variant = nav::FilterVariant::cw_only;
    return s;
}

nav::NavConfig proximity_filter(const config::MissionConfig& cfg) {
    nav::NavConfig nc = cfg.nav.filter;
    nc.thrust_n = 0.0;
    nc.process_noise_q = cfg.nav.q_proximity;
    return nc;
}

void run_proximity(const config::MissionConfig& cfg, Outputs& out) {
    const nav::NavConfig nc = proximity_filter(cfg);
    CsvWriter runs(out.path("nav_proximity_runs.csv"), {"seed", "position_rmse_m", "velocity_rmse_ms", "mean_nees",
                                                        "max_position_error_m", "min_range_m", "max_range_m"});
    for (int k = 0; k < cfg.nav.seeds; ++k) {
        const std::uint64_t seed = cfg.run.seed + static_cast<std::uint64_t>(k);
        const auto r = nav::run_nav(nc, cfg.orbital.constants, proximity_spec(cfg, nc, seed));
        runs.row({num(seed), num(r.position_rmse_m), num(r.velocity_rmse_ms), num(r.mean_nees),
                  num(r.max_position_error_m), num(r.min_range_m), num(r.max_range_m)});
        if (k == 0) {
            write_nav_series(out, "nav_proximity.csv", r);
            plot_nav_errors(out, "nav_proximity_errors.svg", "Proximity EKF position error", r);
            plot::Series n{"NEES", {}, {}};
            for (const auto& s : r.samples) n.x.push_back(s.t_s), n.y.push_back(s.nees);
            out.plot("nav_proximity_nees.svg", {n}, spec("Proximity EKF NEES (first seed)", "time (s)", "NEES"));
        }
    }
    runs.close();
}

void run_longduration(const config::MissionConfig& cfg, Outputs& out) {
    nav::NavConfig nc = cfg.nav.filter;
    nc.process_noise_q = cfg.nav.q_longduration;
    CsvWriter runs(out.path("nav_longduration_runs.csv"),
                   {"seed", "cw_position_rmse_m", "aware_position_rmse_m", "cw_velocity_rmse_ms",
                    "aware_velocity_rmse_ms", "cw_growth_ratio", "final_separation_m"});
    for (int k = 0; k < cfg.nav.seeds; ++k) {
        const std::uint64_t seed = cfg.run.seed + static_cast<std::uint64_t>(k);
        nav::NavRunSpec s;
        s.initial_relative = start_from(cfg.nav.longduration_start, nav::default_longduration_start());
        s.duration_s = cfg.nav.longduration_duration_s;
        s.seed = seed;
        s.variant = nav::FilterVariant::cw_only;
        const auto cw = nav::run_nav(nc, cfg.orbital.constants, s);
        s.variant = nav::FilterVariant::thrust_aware;
        const auto aware = nav::run_nav(nc, cfg.orbital.constants, s);
        runs.row({num(seed), num(cw.position_rmse_m), num(aware.position_rmse_m), num(cw.velocity_rmse_ms),
                  num(aware.velocity_rmse_ms), num(cw.error_growth_ratio),
                  num(cw.final_truth.position_m.norm())});
        if (k == 0) {
            CsvWriter w(out.path("nav_longduration.csv"), {"t_s", "cw_error_m", "aware_error_m", "range_m"});
            plot::Series a{"cw-only", {}, {}}, b{"thrust-aware", {}, {}};
            for (std::size_t i = 0; i < cw.samples.size() && i < aware.samples.size(); ++i) {
                const auto& p = cw.samples[i];
                const auto& q = aware.samples[i];
                w.row({num(p.t_s), num(p.position_error_m.norm()), num(q.position_error_m.norm()), num(p.range_m)});
                a.x.push_back(p.t_s), a.y.push_back(p.position_error_m.norm());
                b.x.push_back(q.t_s), b.y.push_back(q.position_error_m.norm());
            }
            w.close();
            out.plot("nav_longduration_errors.svg", {a, b},
                     spec("Position error under continuous thrust", "time (s)", "position error (m)"));
        }
    }
    runs.close();
}

// ---------------------------------------------------------------------------

void write_dtn(Outputs& out, const config::MissionConfig& cfg, const dtn::DtnMetrics& m) {
    {
        CsvWriter w(out.path("bundles.csv"),
                    {"id", "priority", "size_b", "created_s", "delivered_s", "latency_s", "hops", "dropped"});
        for (const auto& b : m.bundles) {
            const auto lat = b.latency();
            w.row({num(b.id), dtn::to_string(b.priority), num(b.size_bytes), num(b.created_s),
                   b.delivered_s ? num(*b.delivered_s) : "", lat ? num(*lat) : "", num(b.hops),
                   b.dropped ? b.drop_reason : "0"});
        }
        w.close();
    }
    {
        CsvWriter w(out.path("backlog.csv"), {"t_s", "node", "backlog_b"});
        for (const auto& p : m.backlog) w.row({num(p.t_s), m.node_names[static_cast<std::size_t>(p.node)], num(p.bytes)});
        w.close();
    }
    {
        CsvWriter w(out.path("throughput.csv"), {"t_s", "link", "rate_bps", "snr_db"});
        for (const auto& p : m.throughput) {
            w.row({num(p.t_s), m.link_names[static_cast<std::size_t>(p.link)], num(p.bytes_per_s), num(p.snr_db)});
        }
        w.close();
    }
    const auto cdf = dtn::latency_cdf(m.bundles);
    {
        CsvWriter w(out.path("latency_cdf.csv"), {"latency_s", "fraction"});
        for (const auto& [l, f] : cdf) w.row({num(l), num(f)});
        w.close();
    }
    const auto lat = dtn::delivered_latencies(m.bundles);
    for (double h : cfg.dtn.histogram_horizons_s) {
        if (!(h > 0)) continue;
        const double bin = std::max(cfg.dtn.histogram_bin_s, h / 400.0);
        const auto bins = dtn::histogram(lat, bin, h);
        const std::string stem = "latency_hist_" + num(h) + "s";
        CsvWriter w(out.path(stem + ".csv"), {"bin_lo_s", "bin_hi_s", "count"});
        for (const auto& b : bins) w.row({num(b.lower), num(b.upper), num(b.count)});
        w.close();
        std::vector<double> within;
        for (double v : lat) {
            if (v < h) within.push_back(v);
        }
        if (!within.empty()) {
            auto s = spec("Latency histogram (< " + num(h) + " s)", "latency (s)", "bundles", plot::Style::histogram);
            s.bin_width = bin;
            out.plot(stem + ".svg", {{"latency", {}, within}}, s);
        }
    }

    std::vector<plot::Series> backlog;
    for (int node = 0; node < 2; ++node) {
        plot::Series s{m.node_names[static_cast<std::size_t>(node)], {}, {}};
        for (const auto& [t, b] : dtn::backlog_series(m, node)) {
            s.x.push_back(t / 3600.0);
            s.y.push_back(static_cast<double>(b) / 1e6);
        }
        backlog.push_back(std::move(s));
    }
    out.plot("backlog.svg", backlog, spec("Buffer backlog", "time (h)", "backlog (MB)", plot::Style::step));

    std::vector<plot::Series> thr, snr;
    for (std::size_t l = 0; l < m.link_names.size(); ++l) {
        plot::Series a{m.link_names[l], {}, {}}, b{m.link_names[l], {}, {}};
        for (const auto& p : m.throughput) {
            if (p.link != static_cast<int>(l)) continue;
            a.x.push_back(p.t_s / 3600.0), a.y.push_back(p.bytes_per_s / 1e3);
            b.x.push_back(p.t_s / 3600.0), b.y.push_back(p.snr_db);
        }
        thr.push_back(std::move(a));
        snr.push_back(std::move(b));
    }
    out.plot("throughput.svg", thr, spec("Link throughput", "time (h)", "throughput (kB/s)"));
    out.plot("snr.svg", snr, spec("Link SNR", "time (h)", "SNR (dB)"));
    if (!cdf.empty()) {
        plot::Series c{"delivered", {}, {}};
        for (const auto& [l, f] : cdf) c.x.push_back(l), c.y.push_back(f);
        out.plot("latency_cdf.svg", {c}, spec("Bundle delivery latency CDF", "latency (s)", "fraction of bundles",
                                             plot::Style::cdf));
    }
}

void run_dtn_scenario(const config::MissionConfig& cfg, Outputs& out) {
    const auto m = dtn::run_dtn(cfg.dtn.topology(), cfg.dtn.traffic(), cfg.dtn.run_spec(cfg.run.seed));
    write_dtn(out, cfg, m);
}

// ---------------------------------------------------------------------------

void run_avoidance_scenario(const config::MissionConfig& cfg, Outputs& out) {
    const auto& o = cfg.orbital;
    const auto& a = cfg.avoidance;
    std::vector<avoid::Intruder> intruders;
    if (a.intruders > 0) {
        const auto nominal = avoid::predict_trajectory(
            orbit::circular_orbit_state(o.initial_altitude_km, o.inclination_deg, o.initial_mass_kg(), o.constants), o,
            a.intruder_tca_s);
        if (nominal.back().t_s + 0.5 * o.dt_s < a.intruder_tca_s) {
            throw std::invalid_argument("avoidance: intruder_tca_s lies beyond the nominal deorbit");
        }
        intruders.push_back(avoid::coorbital_intruder(nominal.back(), a.intruder_miss_km, a.intruder_id));
    }
    const auto r = avoid::run_with_avoidance(o, intruders, a.policy);

    write_trajectory(out, r.run.samples, {"termination = " + orbit::to_string(r.run.termination)});
    {
        CsvWriter w(out.path("avoidance_events.csv"), {"t_s", "event", "intruder", "miss_km", "action"});
        if (r.error) w.comment("error = " + *r.error);
        for (const auto& e : r.events) w.row({num(e.t_s), e.event, e.intruder, num(e.miss_km), e.action});
        w.close();
    }
    plot_altitude(out, r.run.samples, o.epoch_mjd);

    if (!intruders.empty()) {
        // Flown geometry from the first detection to the end of the screened window.
        double t0 = 0.0, t1 = r.run.final_state.epoch_s;
        for (const auto& e : r.events) {
            if (e.event == "detection") {
                t0 = e.t_s;
                break;
            }
        }
        if (r.conjunction) t1 = std::min(t1, r.conjunction->tca_s + a.policy.horizon_s);
        CsvWriter w(out.path("conjunction.csv"), {"t_s", "own_x_km", "own_y_km", "own_z_km", "intruder_x_km",
                                                  "intruder_y_km", "intruder_z_km", "range_km"});
        plot::Series range{"range", {}, {}};
        for (const auto& s : r.flown_track) {
            if (s.t_s < t0 || s.t_s > t1) continue;
            const Vec3 p = intruders[0].position_at(s.t_s, o.constants);
            const double d = (s.position_km - p).norm();
            w.row({num(s.t_s), num(s.position_km.x()), num(s.position_km.y()), num(s.position_km.z()), num(p.x()),
                   num(p.y()), num(p.z()), num(d)});
            range.x.push_back(s.t_s / 3600.0), range.y.push_back(d);
        }
        w.close();
        if (!range.x.empty()) {
            out.plot("conjunction_range.svg", {range}, spec("Range to intruder (flown)", "time (h)", "range (km)"));
        }
    }
}

// ---------------------------------------------------------------------------

Vec3 relay_position(const config::DtnSection& d, const orbit::BodyConstants& c, double t) {
    const double r = c.earth_radius_km + d.relay_altitude_km;
    const double u = deg2rad(d.relay_phase_deg) + std::sqrt(c.mu_km3s2 / (r * r * r)) * t;
    const double i = deg2rad(d.relay_inclination_deg);
    return r * Vec3(std::cos(u), std::sin(u) * std::cos(i), std::sin(u) * std::sin(i));
}

Vec3 ground_position(const config::DtnSection& d, const orbit::BodyConstants& c, double t) {
    const double lat = deg2rad(d.ground_lat_deg);
    const double lon = deg2rad(d.ground_lon_deg) + kEarthRotation * t;
    return c.earth_radius_km * Vec3(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
}

void run_full_mission(const config::MissionConfig& cfg, Outputs& out) {
    const auto& o = cfg.orbital;
    const auto& pc = cfg.power.battery;
    const double floor = pc.soc_floor();
    const double reserve = pc.bus_w * cfg.power.bus_reserve_min / 60.0 / pc.capacity_wh;

    power::BatteryState battery;
    battery.soc = pc.initial_soc;
    double gated_s = 0.0;
    double min_soc = battery.soc;
    plot::Series soc{"SoC", {}, {}};
    CsvWriter pw(out.path("power.csv"), {"t_s", "in_eclipse", "net_w", "soc", "cycles"});

    auto controller = [&](const orbit::EciState& s) {
        const bool eclipse = orbit::in_eclipse(s, o.constants);
        bool thrust = true;
        if (cfg.power.gate_thrust && eclipse) {
            const double after = battery.soc - (pc.thruster_w + pc.bus_w) * o.dt_s / 3600.0 / pc.capacity_wh;
            thrust = after >= floor + reserve;
        }
        if (!thrust) gated_s += o.dt_s;
        const double net = power::net_power(eclipse, pc, thrust);
        battery = power::battery_step(battery, net, o.dt_s, pc);
        min_soc = std::min(min_soc, battery.soc);
        soc.x.push_back((s.epoch_s + o.dt_s) / 3600.0);
        soc.y.push_back(battery.soc);
        pw.row({num(s.epoch_s + o.dt_s), eclipse ? "1" : "0", num(net), num(battery.soc), num(battery.cycles)});
        orbit::StepCommand cmd;
        cmd.thrust_enabled = thrust;
        return cmd;
    };
    const auto r = orbit::run_deorbit(o.initial_altitude_km, o.final_altitude_km, o, controller);
    pw.comment("floor_violated = " + std::string(battery.floor_violated ? "true" : "false"));
    pw.comment("gated_thrust_s = " + num(gated_s));
    pw.comment("min_soc = " + num(min_soc));
    pw.close();
    out.plot("soc.svg", {soc, {"SoC floor", {soc.x.front(), soc.x.back()}, {floor, floor}}},
             spec("Battery state of charge", "time (h)", "SoC"));

    // Single-eclipse sizing check: constant load from the initial SoC, 1 s steps.
    {
        const double load = cfg.power.check_load_w, duration = cfg.power.check_eclipse_min * 60.0;
        CsvWriter w(out.path("eclipse_check.csv"), {"t_s", "soc"});
        power::BatteryState st;
        st.soc = pc.initial_soc;
        w.row({num(0.0), num(st.soc)});
        for (double t = 0.0; t < duration; t += 1.0) {
            const double dt = std::min(1.0, duration - t);
            st = power::battery_step(st, -load, dt, pc);
            w.row({num(t + dt), num(st.soc)});
        }
        w.comment("load_w = " + num(load));
        w.comment("duration_s = " + num(duration));
        w.comment("floor_violated = " + std::string(st.floor_violated ? "true" : "false"));
        w.close();
    }

    write_trajectory(out, r.samples, {"termination = " + orbit::to_string(r.termination)});
    write_orbit_means(out, r.samples);
    plot_altitude(out, r.samples, o.epoch_mjd);

    // DTN over the first hours of the deorbit with geometry-driven links.
    config::DtnSection d = cfg.dtn;
    d.primary_relay.mode = dtn::SnrMode::geometry;
    d.relay_ground.mode = dtn::SnrMode::geometry;
    auto spec_run = d.run_spec(cfg.run.seed);
    const double horizon = d.duration_s + d.drain_s;
    if (r.samples.back().t_s < horizon) {
        throw std::invalid_argument("full-mission: deorbit ends before the DTN window closes");
    }
    const auto& samples = r.samples;
    const auto constants = o.constants;
    dtn::LinkGeometry pr;
    pr.from = [&samples](double t) { return orbit::interpolate_position(samples, t); };
    pr.to = [d, constants](double t) { return relay_position(d, constants, t); };
    pr.earth_radius_km = constants.earth_radius_km;
    dtn::LinkGeometry rg;
    rg.from = pr.to;
    rg.to = [d, constants](double t) { return ground_position(d, constants, t); };
    rg.earth_radius_km = constants.earth_radius_km;
    rg.to_is_ground = true;
    rg.min_elevation_deg = d.min_elevation_deg;
    spec_run.geometry = {pr, rg};
    const auto m = dtn::run_dtn(d.topology(), d.traffic(), spec_run);
    write_dtn(out, cfg, m);

    // One proximity-navigation pass with the first seed.
    const nav::NavConfig nc = proximity_filter(cfg);
    const auto nr = nav::run_nav(nc, o.constants, proximity_spec(cfg, nc, cfg.run.seed));
    write_nav_series(out, "nav_proximity.csv", nr);
    plot_nav_errors(out, "nav_proximity_errors.svg", "Proximity EKF position error", nr);
}

}  // namespace

ScenarioReport run_scenario(const std::string& name, const config::MissionConfig& cfg, const fs::path& out_dir) {
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw UnknownScenario("unknown scenario '" + name + "'");
    }
    cfg.validate();
    Outputs out(out_dir);
    {
        std::ofstream f(out.path("effective_config.ini"), std::ios::binary);
        f << config::echo_config(cfg);
    }
    try {
        if (name == "deorbit") run_deorbit_scenario(cfg, out);
        else if (name == "proximity-nav") run_proximity(cfg, out);
        else if (name == "longduration-nav") run_longduration(cfg, out);
        else if (name == "dtn") run_dtn_scenario(cfg, out);
        else if (name == "avoidance") run_avoidance_scenario(cfg, out);
        else run_full_mission(cfg, out);
    } catch (const std::exception& e) {
        throw std::runtime_error("scenario " + name + ": " + e.what());
    }

    ScenarioReport report = evaluate_outputs(name, cfg, out_dir);
    report.files = out.files();
    report.files.push_back("report.txt");
    std::ofstream(out_dir / "report.txt", std::ios::binary) << format_report(report);
    return report;
}

}  // namespace deorbit::scenario
