#include "deorbit/csv.hpp"
#include "deorbit/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace deorbit::scenario {

namespace fs = std::filesystem;

bool ScenarioReport::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

double ScenarioReport::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
        if (k == name) return v;
    }
    throw std::out_of_range("no metric '" + name + "' in " + scenario + " report");
}

const Verdict& ScenarioReport::verdict(const std::string& name) const {
    for (const auto& v : verdicts) {
        if (v.name == name) return v;
    }
    throw std::out_of_range("no verdict '" + name + "' in " + scenario + " report");
}

namespace {

std::string g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string band(double lo, double hi) { return "[" + g(lo) + ", " + g(hi) + "]"; }

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

io::CsvTable table(const fs::path& dir, const std::string& name) { return io::read_csv(dir / name); }

std::vector<orbit::TrajectorySample> read_trajectory(const fs::path& dir) {
    const auto t = table(dir, "trajectory.csv");
    std::vector<orbit::TrajectorySample> out;
    out.reserve(t.rows.size());
    const std::size_t c[] = {t.column("t_s"),    t.column("x_km"),   t.column("y_km"),    t.column("z_km"),
                             t.column("vx_kms"), t.column("vy_kms"), t.column("vz_kms"),  t.column("mass_kg"),
                             t.column("alt_km"), t.column("eclipse")};
    for (const auto& r : t.rows) {
        orbit::TrajectorySample s;
        s.t_s = io::parse_double(r[c[0]]);
        s.position_km = Vec3(io::parse_double(r[c[1]]), io::parse_double(r[c[2]]), io::parse_double(r[c[3]]));
        s.velocity_kms = Vec3(io::parse_double(r[c[4]]), io::parse_double(r[c[5]]), io::parse_double(r[c[6]]));
        s.mass_kg = io::parse_double(r[c[7]]);
        s.altitude_km = io::parse_double(r[c[8]]);
        s.eclipse = r[c[9]] == "1";
        out.push_back(s);
    }
    if (out.empty()) throw std::runtime_error("trajectory.csv has no samples");
    return out;
}

void add(ScenarioReport& r, const std::string& name, bool ok, const std::string& detail) {
    r.verdicts.push_back({name, ok, detail});
}

// Completion check shared by every scenario that flies the deorbit.
void evaluate_completion(ScenarioReport& r, const config::MissionConfig& cfg,
                         const std::vector<orbit::TrajectorySample>& traj) {
    const double final_alt = traj.back().altitude_km;
    r.metrics.emplace_back("duration_days", (traj.back().t_s - traj.front().t_s) / kSecondsPerDay);
    r.metrics.emplace_back("final_altitude_km", final_alt);
    add(r, "deorbit_completed", final_alt <= cfg.orbital.final_altitude_km,
        "final altitude " + g(final_alt) + " km vs target " + g(cfg.orbital.final_altitude_km) + " km");
}

void evaluate_deorbit(ScenarioReport& r, const config::MissionConfig& cfg, const fs::path& dir) {
    const auto& a = cfg.acceptance;
    const auto traj = read_trajectory(dir);
    evaluate_completion(r, cfg, traj);
    const double days = r.metric("duration_days");
    add(r, "deorbit_duration", within(days, a.deorbit_days_min, a.deorbit_days_max),
        g(days) + " days in " + band(a.deorbit_days_min, a.deorbit_days_max));

    const double used = traj.front().mass_kg - traj.back().mass_kg;
    r.metrics.emplace_back("propellant_kg", used);
    add(r, "propellant", within(used, a.propellant_min_kg, a.propellant_max_kg) && used <= cfg.orbital.propellant_kg,
        g(used) + " kg in " + band(a.propellant_min_kg, a.propellant_max_kg) + ", tank " +
            g(cfg.orbital.propellant_kg) + " kg");

    const auto means = orbit::per_orbit_mean_altitude(traj);
    r.metrics.emplace_back("orbits", static_cast<double>(orbit::count_orbits(traj)));
    double r2 = 0.0;
    std::string detail;
    try {
        r2 = orbit::decay_fit(means, a.decay_middle_fraction).r_squared;
        detail = "R^2 " + g(r2) + " >= " + g(a.decay_r2_min) + " over " + std::to_string(means.size()) + " orbits";
    } catch (const std::exception& e) {
        detail = e.what();
    }
    r.metrics.emplace_back("decay_r2", r2);
    add(r, "decay_linearity", r2 >= a.decay_r2_min, detail);
}

void evaluate_proximity(ScenarioReport& r, const config::MissionConfig& cfg, const fs::path& dir) {
    const auto& a = cfg.acceptance;
    const auto runs = table(dir, "nav_proximity_runs.csv");
    const auto pos = runs.numbers("position_rmse_m");
    const auto vel = runs.numbers("velocity_rmse_ms");
    const auto nees = runs.numbers("mean_nees");
    int passing = 0;
    double worst_p = 0, worst_v = 0, nees_sum = 0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (pos[i] < a.proximity_position_rmse_max_m && vel[i] < a.proximity_velocity_rmse_max_ms) ++passing;
        worst_p = std::max(worst_p, pos[i]);
        worst_v = std::max(worst_v, vel[i]);
        nees_sum += nees[i];
    }
    const int n = static_cast<int>(pos.size());
    const double mean_nees = n > 0 ? nees_sum / n : 0.0;
    r.metrics.emplace_back("seeds", n);
    r.metrics.emplace_back("passing_seeds", passing);
    r.metrics.emplace_back("worst_position_rmse_m", worst_p);
    r.metrics.emplace_back("worst_velocity_rmse_ms", worst_v);
    r.metrics.emplace_back("mean_nees", mean_nees);
    const int need = std::min(a.proximity_min_passing, n);
    add(r, "proximity_rmse", n > 0 && passing >= need,
        std::to_string(passing) + "/" + std::to_string(n) + " seeds with position RMSE < " +
            g(a.proximity_position_rmse_max_m) + " m and velocity RMSE < " + g(a.proximity_velocity_rmse_max_ms) +
            " m/s (need " + std::to_string(need) + ")");
    if (n > 0) {
        const auto [lo, hi] = nav::nees_band(6, n, a.nees_confidence);
        r.metrics.emplace_back("nees_band_lo", lo);
        r.metrics.emplace_back("nees_band_hi", hi);
        add(r, "nees_consistency", within(mean_nees, lo, hi),
            "mean NEES " + g(mean_nees) + " over " + std::to_string(n) + " seeds in " + band(lo, hi));
    }

    // The first seed's time series must reproduce its row in the runs table.
    const auto series = table(dir, "nav_proximity.csv");
    double s2 = 0.0;
    for (std::size_t i = 0; i < series.rows.size(); ++i) {
        const double ex = series.number(i, "ex_m"), ey = series.number(i, "ey_m"), ez = series.number(i, "ez_m");
        s2 += ex * ex + ey * ey + ez * ez;
    }
    const double rmse = series.rows.empty() ? 0.0 : std::sqrt(s2 / static_cast<double>(series.rows.size()));
    add(r, "series_consistency", n > 0 && std::abs(rmse - pos[0]) <= 1e-9 * std::max(1.0, pos[0]),
        "time-series RMSE " + g(rmse) + " m vs table " + (n > 0 ? g(pos[0]) : "-") + " m");
}

void evaluate_longduration(ScenarioReport& r, const config::MissionConfig& cfg, const fs::path& dir) {
    const auto& a = cfg.acceptance;
    const auto runs = table(dir, "nav_longduration_runs.csv");
    const auto cw = runs.numbers("cw_position_rmse_m");
    const auto aware = runs.numbers("aware_position_rmse_m");
    const auto sep = runs.numbers("final_separation_m");
    int in_band = 0, aware_wins = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0, worst_aware = 0;
    for (std::size_t i = 0; i < cw.size(); ++i) {
        if (within(cw[i], a.longduration_rmse_min_m, a.longduration_rmse_max_m)) ++in_band;
        if (aware[i] < cw[i]) ++aware_wins;
        lo = std::min(lo, cw[i]);
        hi = std::max(hi, cw[i]);
        worst_aware = std::max(worst_aware, aware[i]);
    }
    const int n = static_cast<int>(cw.size());
    r.metrics.emplace_back("seeds", n);
    r.metrics.emplace_back("cw_rmse_min_m", lo);
    r.metrics.emplace_back("cw_rmse_max_m", hi);
    r.metrics.emplace_back("aware_rmse_max_m", worst_aware);
    r.metrics.emplace_back("final_separation_m", sep.empty() ? 0.0 : sep[0]);
    add(r, "cw_only_divergence", n > 0 && in_band == n,
        std::to_string(in_band) + "/" + std::to_string(n) + " seeds with cw-only RMSE in " +
            band(a.longduration_rmse_min_m, a.longduration_rmse_max_m) + " m (observed " + band(lo, hi) + ")");
    add(r, "thrust_aware_better", n > 0 && aware_wins == n,
        "thrust-aware beats cw-only on " + std::to_string(aware_wins) + "/" + std::to_string(n) + " seeds");
}

struct DtnFacts {
    std::size_t total = 0, dropped = 0, undelivered = 0, prompt = 0, tail = 0;
    double max_latency = 0.0;
    double relay_peak = 0.0;
    double within = 0.0;
};

DtnFacts dtn_facts(const config::MissionConfig& cfg, const fs::path& dir, bool parametric) {
    const auto& a = cfg.acceptance;
    DtnFacts f;

    // Windows (per throughput sample) in which some link had no rate.
    std::map<double, bool> outage;
    if (parametric) {
        const auto thr = table(dir, "throughput.csv");
        const std::map<std::string, const dtn::LinkModel*> links{{cfg.dtn.primary_relay.name, &cfg.dtn.primary_relay},
                                                                 {cfg.dtn.relay_ground.name, &cfg.dtn.relay_ground}};
        for (std::size_t i = 0; i < thr.rows.size(); ++i) {
            const auto it = links.find(thr.text(i, "link"));
            if (it == links.end()) continue;
            const bool down = dtn::rate_from_snr(thr.number(i, "snr_db"), *it->second) <= 0;
            outage[thr.number(i, "t_s")] |= down;
        }
    }
    const double window = cfg.dtn.throughput_sample_s;

    const auto b = table(dir, "bundles.csv");
    const std::size_t c_created = b.column("created_s"), c_lat = b.column("latency_s"), c_drop = b.column("dropped");
    for (const auto& row : b.rows) {
        ++f.total;
        if (row[c_drop] != "0") ++f.dropped;
        if (row[c_lat].empty()) {
            ++f.undelivered;
            continue;
        }
        const double lat = io::parse_double(row[c_lat]);
        f.max_latency = std::max(f.max_latency, lat);
        if (lat <= a.dtn_latency_s) ++f.prompt;
        if (parametric && within(lat, a.dtn_tail_min_s, a.dtn_tail_max_s)) {
            const double created = io::parse_double(row[c_created]);
            const auto it = outage.find(std::floor(created / window) * window);
            if (it != outage.end() && it->second) ++f.tail;
        }
    }
    f.within = f.total ? static_cast<double>(f.prompt) / static_cast<double>(f.total) : 0.0;

    const auto bl = table(dir, "backlog.csv");
    const std::size_t c_node = bl.column("node"), c_b = bl.column("backlog_b");
    for (const auto& row : bl.rows) {
        if (row[c_node] == "Relay") f.relay_peak = std::max(f.relay_peak, io::parse_double(row[c_b]));
    }
    return f;
}

void evaluate_dtn(ScenarioReport& r, const config::MissionConfig& cfg, const fs::path& dir) {
    const auto& a = cfg.acceptance;
    const DtnFacts f = dtn_facts(cfg, dir, true);
    r.metrics.emplace_back("bundles", static_cast<double>(f.total));
    r.metrics.emplace_back("delivered_within_fraction", f.within);
    r.metrics.emplace_back("dropped", static_cast<double>(f.dropped));
    r.metrics.emplace_back("max_latency_s", f.max_latency);
    r.metrics.emplace_back("outage_tail_bundles", static_cast<double>(f.tail));
    r.metrics.emplace_back("relay_peak_backlog_b", f.relay_peak);
    add(r, "prompt_delivery", within(f.within, a.dtn_within_min, a.dtn_within_max),
        g(f.within) + " of bundles within " + g(a.dtn_latency_s) + " s, band " + band(a.dtn_within_min, a.dtn_within_max));
    const bool unlimited = cfg.dtn.capacity_primary_b == 0 && cfg.dtn.capacity_relay_b == 0 && cfg.dtn.capacity_ground_b == 0;
    add(r, "no_losses", f.dropped == 0 && f.undelivered == 0,
        std::to_string(f.dropped) + " dropped, " + std::to_string(f.undelivered) + " undelivered of " +
            std::to_string(f.total) + (unlimited ? " (unlimited buffers)" : " (finite buffers)"));
    add(r, "outage_tail", f.tail > 0 && f.max_latency <= a.dtn_tail_max_s,
        std::to_string(f.tail) + " outage-created bundles with latency in " + band(a.dtn_tail_min_s, a.dtn_tail_max_s) +
            " s; max latency " + g(f.max_latency) + " s");
    const double lo = a.relay_backlog_target_b / a.relay_backlog_factor;
    const double hi = a.relay_backlog_target_b * a.relay_backlog_factor;
    add(r, "relay_backlog_peak", within(f.relay_peak, lo, hi), g(f.relay_peak) + " B in " + band(lo, hi) + " B");
}

void evaluate_avoidance(ScenarioReport& r, const config::MissionConfig& cfg, const fs::path& dir) {
    const auto traj = read_trajectory(dir);
    evaluate_completion(r, cfg, traj);
    if (cfg.avoidance.intruders == 0) return;

    const auto ev = table(dir, "avoidance_events.csv");
    double t_man = -1, t_res = -1, t_det = -1;
    bool infeasible = false;
    for (std::size_t i = 0; i < ev.rows.size(); ++i) {
        const auto& e = ev.text(i, "event");
        if (e == "detection" && t_det < 0) t_det = ev.number(i, "t_s");
        if (e == "maneuver") {
            if (ev.text(i, "action") == "infeasible") infeasible = true;
            else if (t_man < 0) t_man = ev.number(i, "t_s");
        }
        if (e == "resume" && t_res < 0) t_res = ev.number(i, "t_s");
    }
    r.metrics.emplace_back("detection_t_s", t_det);
    r.metrics.emplace_back("maneuver_t_s", t_man);
    r.metrics.emplace_back("maneuver_duration_s", t_man >= 0 && t_res >= 0 ? t_res - t_man : 0.0);
    add(r, "interrupt_triggered", t_man >= 0 && !infeasible,
        t_man >= 0 ? "evasion started at t=" + g(t_man) + " s" : (infeasible ? "evasion infeasible" : "no evasion"));
    add(r, "resumed", t_res >= t_man && t_man >= 0, t_res >= 0 ? "retrograde resumed at t=" + g(t_res) + " s" : "no resume");

    const auto cj = table(dir, "conjunction.csv");
    std::vector<orbit::TrajectorySample> own, other;
    for (std::size_t i = 0; i < cj.rows.size(); ++i) {
        orbit::TrajectorySample a, b;
        a.t_s = b.t_s = cj.number(i, "t_s");
        a.position_km = Vec3(cj.number(i, "own_x_km"), cj.number(i, "own_y_km"), cj.number(i, "own_z_km"));
        b.position_km = Vec3(cj.number(i, "intruder_x_km"), cj.number(i, "intruder_y_km"), cj.number(i, "intruder_z_km"));
        own.push_back(a);
        other.push_back(b);
    }
    double miss = 0.0;
    if (!own.empty()) {
        miss = avoid::closest_approach(own, other, own.back().t_s - own.front().t_s, cfg.avoidance.intruder_id).miss_km;
    }
    r.metrics.emplace_back("flown_miss_km", miss);
    add(r, "clearance", !own.empty() && miss >= cfg.avoidance.policy.clearance_km,
        "re-propagated miss " + g(miss) + " km vs clearance " + g(cfg.avoidance.policy.clearance_km) + " km");
}

void evaluate_full_mission(ScenarioReport& r, const config::MissionConfig& cfg, const fs::path& dir) {
    const auto traj = read_trajectory(dir);
    evaluate_completion(r, cfg, traj);
    r.metrics.emplace_back("propellant_kg", traj.front().mass_kg - traj.back().mass_kg);

    const auto p = table(dir, "power.csv");
    const auto soc = p.numbers("soc");
    const auto ecl = p.numbers("in_eclipse");
    const auto net = p.numbers("net_w");
    const double floor = cfg.power.battery.soc_floor();
    double min_soc = soc.empty() ? 0.0 : *std::min_element(soc.begin(), soc.end());
    std::size_t gated = 0;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (ecl[i] == 1.0 && net[i] == -cfg.power.battery.bus_w) ++gated;
    }
    r.metrics.emplace_back("min_soc", min_soc);
    r.metrics.emplace_back("cycles", p.rows.empty() ? 0.0 : p.number(p.rows.size() - 1, "cycles"));
    r.metrics.emplace_back("gated_thrust_s", static_cast<double>(gated) * cfg.orbital.dt_s);
    add(r, "soc_floor_respected", !soc.empty() && min_soc > floor,
        "minimum SoC " + g(min_soc) + " vs floor " + g(floor));

    const auto ec = table(dir, "eclipse_check.csv");
    const auto ec_soc = ec.numbers("soc");
    const double ec_min = ec_soc.empty() ? 0.0 : *std::min_element(ec_soc.begin(), ec_soc.end());
    r.metrics.emplace_back("eclipse_check_min_soc", ec_min);
    add(r, "eclipse_sizing", !ec_soc.empty() && ec_min > floor,
        g(io::parse_double(ec.meta("duration_s")) / 60.0) + " min at " + g(io::parse_double(ec.meta("load_w"))) +
            " W from " + g(cfg.power.battery.capacity_wh) + " Wh: minimum SoC " + g(ec_min) + " vs floor " + g(floor));

    const DtnFacts f = dtn_facts(cfg, dir, false);
    r.metrics.emplace_back("bundles", static_cast<double>(f.total));
    r.metrics.emplace_back("delivered_within_fraction", f.within);
    r.metrics.emplace_back("max_latency_s", f.max_latency);
    r.metrics.emplace_back("relay_peak_backlog_b", f.relay_peak);
    add(r, "no_losses", f.dropped == 0, std::to_string(f.dropped) + " dropped of " + std::to_string(f.total));

    const auto nav = table(dir, "nav_proximity.csv");
    double s2 = 0.0;
    for (std::size_t i = 0; i < nav.rows.size(); ++i) {
        const double ex = nav.number(i, "ex_m"), ey = nav.number(i, "ey_m"), ez = nav.number(i, "ez_m");
        s2 += ex * ex + ey * ey + ez * ez;
    }
    const double rmse = nav.rows.empty() ? 0.0 : std::sqrt(s2 / static_cast<double>(nav.rows.size()));
    r.metrics.emplace_back("proximity_position_rmse_m", rmse);
    add(r, "proximity_rmse", !nav.rows.empty() && rmse < cfg.acceptance.proximity_position_rmse_max_m,
        "position RMSE " + g(rmse) + " m < " + g(cfg.acceptance.proximity_position_rmse_max_m) + " m");
}

}  // namespace

ScenarioReport evaluate_outputs(const std::string& name, const config::MissionConfig& cfg, const fs::path& dir) {
    ScenarioReport r;
    r.scenario = name;
    r.seed = cfg.run.seed;
    if (name == "deorbit") evaluate_deorbit(r, cfg, dir);
    else if (name == "proximity-nav") evaluate_proximity(r, cfg, dir);
    else if (name == "longduration-nav") evaluate_longduration(r, cfg, dir);
    else if (name == "dtn") evaluate_dtn(r, cfg, dir);
    else if (name == "avoidance") evaluate_avoidance(r, cfg, dir);
    else if (name == "full-mission") evaluate_full_mission(r, cfg, dir);
    else throw UnknownScenario("unknown scenario '" + name + "'");
    return r;
}

ScenarioReport report_directory(const fs::path& dir) {
    std::ifstream in(dir / "report.txt");
    if (!in) throw std::runtime_error("no report.txt in " + dir.string());
    std::string line, name;
    std::vector<fs::path> files;
    while (std::getline(in, line)) {
        if (line.rfind("scenario = ", 0) == 0) name = line.substr(11);
        if (line.rfind("file ", 0) == 0) files.push_back(line.substr(5));
    }
    if (name.empty()) throw std::runtime_error(dir.string() + "/report.txt names no scenario");
    const auto cfg = config::load_config(dir / "effective_config.ini");
    ScenarioReport r = evaluate_outputs(name, cfg, dir);
    r.files = files;
    for (const auto& f : files) {
        std::error_code ec;
        const bool ok = fs::exists(dir / f) && fs::file_size(dir / f, ec) > 0 && !ec;
        if (!ok) r.verdicts.push_back({"file_present", false, f.string() + " is missing or empty"});
    }
    return r;
}

std::string format_report(const ScenarioReport& report) {
    std::ostringstream o;
    o << "scenario = " << report.scenario << "\n";
    o << "seed = " << report.seed << "\n";
    for (const auto& [k, v] : report.metrics) o << "metric " << k << " = " << g(v) << "\n";
    for (const auto& v : report.verdicts) o << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
    for (const auto& f : report.files) o << "file " << f.string() << "\n";
    o << "result = " << (report.passed() ? "PASS" : "FAIL") << "\n";
    return o.str();
}

}  // namespace deorbit::scenario
