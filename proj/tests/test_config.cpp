#include "deorbit/config.hpp"

#include <doctest.h>

#include <set>

using namespace deorbit;
using namespace deorbit::config;

namespace {

ConfigError rejection(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("configuration was accepted: ", text);
    return ConfigError("");
}

}  // namespace

TEST_SUITE("configuration") {
    TEST_CASE("empty file yields the documented defaults") {
        const MissionConfig cfg = parse_config("");
        CHECK(echo_config(cfg) == echo_config(MissionConfig{}));
        CHECK(echo_config(parse_config("# only a comment\n\n   \n")) == echo_config(cfg));
        CHECK(cfg.orbital.initial_altitude_km == 800.0);
        CHECK(cfg.orbital.final_altitude_km == 100.0);
        CHECK(cfg.orbital.thrust.thrust_n == 0.237);
        CHECK(cfg.orbital.thrust.isp_s == 4150.0);
        CHECK(cfg.orbital.initial_mass_kg() == 420.0);
        CHECK(cfg.orbital.propellant_kg == 20.0);
        CHECK(cfg.orbital.dt_s == 10.0);
        CHECK(cfg.power.battery.capacity_wh == 5700.0);
        CHECK(cfg.power.battery.max_dod == 0.8);
        CHECK(cfg.power.battery.array_w == 7300.0);
        CHECK(cfg.nav.filter.sigma_range_m == 1.0);
        CHECK(cfg.nav.filter.thrust_n == 0.3);
        CHECK(cfg.nav.seeds == 20);
        CHECK(cfg.avoidance.policy.clearance_km == 5.0);
        CHECK(cfg.run.seed == 42);
    }

    TEST_CASE("negative thrust is rejected naming the key and line") {
        const auto e = rejection("# comment\n[orbital]\nthrust_n = -1\n");
        CHECK(e.key() == "thrust_n");
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("thrust_n") != std::string::npos);
    }

    TEST_CASE("malformed input is rejected") {
        CHECK(rejection("[orbital]\nthrust = 0.2\n").key() == "thrust");
        CHECK(rejection("[orbit]\n").key() == "orbit");
        const auto dup = rejection("[orbital]\nthrust_n = 0.2\n\nthrust_n = 0.3\n");
        CHECK(dup.key() == "thrust_n");
        CHECK(dup.line() == 4);
        CHECK(rejection("[orbital]\nthrust_n 0.2\n").line() == 2);
        CHECK(rejection("thrust_n = 0.2\n").key() == "thrust_n");
        CHECK(rejection("[orbital\n").line() == 1);
        CHECK(rejection("[orbital]\nthrust_n = fast\n").key() == "thrust_n");
        CHECK(rejection("[nav]\nseeds = 2.5\n").key() == "seeds");
        CHECK(rejection("[power]\nmax_dod = 1.5\n").key() == "max_dod");
        CHECK(rejection("[orbital]\nsun_direction = 1,1,0\n").key() == "sun_direction");
        CHECK(rejection("[power]\ngate_thrust = maybe\n").key() == "gate_thrust");
        CHECK(rejection("[dtn]\nsafety_priority = urgent\n").key() == "safety_priority");
    }

    TEST_CASE("cross-field invariants are checked after parsing") {
        CHECK_THROWS_AS(parse_config("[orbital]\nfinal_altitude_km = 900\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("[avoidance]\nclearance_km = 0.5\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("[acceptance]\ndeorbit_days_min = 9\n"), ConfigError);
    }

    TEST_CASE("inline comments and whitespace are ignored") {
        const auto cfg = parse_config("[orbital]   # the orbit\n  thrust_n   =   0.3   # newtons\n");
        CHECK(cfg.orbital.thrust.thrust_n == 0.3);
    }

    TEST_CASE("echoed configuration parses back to itself") {
        MissionConfig cfg = parse_config(
            "[orbital]\nthrust_n = 0.3\ninclination_deg = 51.6\nthrust_mode = inertial-fixed\n"
            "inertial_direction = 0,-1,0\n"
            "[power]\ncapacity_wh = 4100\ngate_thrust = false\n"
            "[nav]\nsigma_angle_rad = 0.002\nproximity_start = 100,-300,0,0.01,0,0.02\n"
            "[dtn]\npr_outages = 100:50;4000:600\nrg_rate_table = 10:1000,20:5000.5\npoisson = true\n"
            "bulk_priority = metadata\nhistogram_horizons_s = 3,30,300\n"
            "[avoidance]\nintruder_id = rock\nthrust_fraction = 0.1234567890123\n"
            "[run]\nseed = 18446744073709551615\noutput_dir = /tmp/some dir\n");
        const std::string once = echo_config(cfg);
        const std::string twice = echo_config(parse_config(once));
        CHECK(once == twice);
        const MissionConfig back = parse_config(once);
        CHECK(back.avoidance.policy.thrust_fraction == cfg.avoidance.policy.thrust_fraction);
        CHECK(back.run.seed == 18446744073709551615ULL);
        CHECK(back.run.output_dir == "/tmp/some dir");
        CHECK(back.dtn.primary_relay.parametric.outages.size() == 2);
        CHECK(back.dtn.relay_ground.rate_table.back().bytes_per_s == 5000.5);
        CHECK(back.nav.proximity_start.size() == 6);
    }

    TEST_CASE("defaults round-trip exactly") {
        const MissionConfig def;
        CHECK(echo_config(parse_config(echo_config(def))) == echo_config(def));
    }

    TEST_CASE("registry reaches every documented tunable") {
        std::set<std::pair<std::string, std::string>> keys;
        for (const auto& f : registry()) {
            CHECK_MESSAGE(keys.insert({f.section, f.key}).second, "duplicate key ", f.section, ".", f.key);
            CHECK_FALSE(f.doc.empty());
        }
        const std::pair<const char*, const char*> expected[] = {
            {"orbital", "thrust_n"}, {"orbital", "isp_s"}, {"orbital", "dt_s"}, {"orbital", "sample_interval_s"},
            {"orbital", "max_duration_days"}, {"orbital", "drag_enabled"}, {"orbital", "sun_direction"},
            {"orbital", "cross_track_offset_deg"}, {"power", "capacity_wh"}, {"power", "max_dod"},
            {"power", "max_charge_w"}, {"power", "charge_efficiency"}, {"power", "cycle_life"},
            {"power", "gate_thrust"}, {"nav", "sigma_range_m"}, {"nav", "sigma_angle_rad"},
            {"nav", "q_proximity"}, {"nav", "q_longduration"}, {"nav", "thrust_n"}, {"nav", "filter_step_s"},
            {"dtn", "pr_rate_table"}, {"dtn", "rg_rate_table"}, {"dtn", "pr_outages"}, {"dtn", "capacity_relay_b"},
            {"dtn", "poisson"}, {"dtn", "relay_altitude_km"}, {"dtn", "ground_lat_deg"},
            {"dtn", "min_elevation_deg"}, {"avoidance", "clearance_km"}, {"avoidance", "trigger_km"},
            {"avoidance", "horizon_s"}, {"avoidance", "detection_range_km"}, {"avoidance", "offset_deg"},
            {"run", "seed"}, {"run", "output_dir"}, {"acceptance", "dtn_within_min"},
        };
        for (const auto& [sec, key] : expected) {
            CHECK_MESSAGE(keys.count({sec, key}) == 1, "missing ", sec, ".", key);
        }
    }

    TEST_CASE("rate tables and outage lists") {
        const auto t = parse_rate_table(" 16:12000 , 19:24000,22:36000");
        REQUIRE(t.size() == 3);
        CHECK(t[1].min_snr_db == 19.0);
        CHECK(t[1].bytes_per_s == 24000.0);
        CHECK(parse_rate_table(format_rate_table(t)).size() == 3);
        CHECK_THROWS_AS(parse_rate_table(""), std::invalid_argument);
        CHECK_THROWS_AS(parse_rate_table("19:2,16:1"), std::invalid_argument);
        CHECK_THROWS_AS(parse_rate_table("16-12000"), std::invalid_argument);

        const auto o = parse_outages("9300:1700; 20000:60");
        REQUIRE(o.size() == 2);
        CHECK(o[0].start_s == 9300.0);
        CHECK(o[0].duration_s == 1700.0);
        CHECK(parse_outages("").empty());
        CHECK(format_outages(parse_outages(format_outages(o))) == format_outages(o));
        CHECK_THROWS_AS(parse_outages("10:0"), std::invalid_argument);
        CHECK_THROWS_AS(parse_outages("-5:10"), std::invalid_argument);
    }

    TEST_CASE("missing file is a configuration error") {
        CHECK_THROWS_AS(load_config("/nonexistent/mission.ini"), ConfigError);
    }
}
