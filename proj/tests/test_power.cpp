#include "deorbit/power.hpp"

#include "deorbit/common.hpp"

#include <doctest.h>

#include <cmath>

using namespace deorbit;
using namespace deorbit::power;

TEST_SUITE("power") {
    TEST_CASE("net power in sunlight and eclipse") {
        PowerConfig cfg;
        CHECK(net_power(false, cfg) == doctest::Approx(200.0));
        PowerConfig heavy = cfg;
        heavy.thruster_w = 7300.0;
        heavy.bus_w = 0.0;
        CHECK(net_power(true, heavy) == doctest::Approx(-7300.0));
        PowerConfig zero;
        zero.array_w = zero.thruster_w = zero.bus_w = 0.0;
        CHECK(net_power(true, zero) == 0.0);
        CHECK(net_power(false, zero) == 0.0);
        CHECK(net_power(true, cfg, false) == doctest::Approx(-200.0));
    }

    TEST_CASE("battery step examples") {
        PowerConfig cfg;
        BatteryState s;
        const auto a = battery_step(s, -7300.0, 2100.0, cfg);
        CHECK(a.soc == doctest::Approx(1.0 - 7300.0 * 2100.0 / 3600.0 / 5700.0).epsilon(1e-14));
        CHECK(a.soc == doctest::Approx(0.2529).epsilon(1e-3));
        CHECK_FALSE(a.floor_violated);

        const auto same = battery_step(a, 0.0, 100.0, cfg);
        CHECK(same.soc == a.soc);
        CHECK(same.cycles == a.cycles);
        CHECK(same.phase == a.phase);

        BatteryState low;
        low.soc = 0.21;
        const auto c = battery_step(low, -7300.0, 600.0, cfg);
        CHECK(c.soc == doctest::Approx(0.20));
        CHECK(c.floor_violated);

        CHECK_THROWS_AS(battery_step(s, -1.0, 0.0, cfg), std::invalid_argument);
    }

    TEST_CASE("charging is limited by charge acceptance and capped at full") {
        PowerConfig cfg;
        BatteryState s;
        s.soc = 0.5;
        const auto a = battery_step(s, 5000.0, 3600.0, cfg);
        CHECK(a.soc == doctest::Approx(0.5 + 2000.0 / 5700.0).epsilon(1e-14));
        const auto b = battery_step(a, 5000.0, 3600.0, cfg);
        CHECK(b.soc == 1.0);
    }

    TEST_CASE("SoC stays within its bounds for any step sequence") {
        PowerConfig cfg;
        GaussianRng rng(7);
        BatteryState s;
        for (int i = 0; i < 20000; ++i) {
            s = battery_step(s, rng.normal(0.0, 5000.0), 1.0 + 600.0 * rng.uniform(), cfg);
            REQUIRE(s.soc >= cfg.soc_floor());
            REQUIRE(s.soc <= 1.0);
        }
    }

    TEST_CASE("energy bookkeeping over a clamp-free interval") {
        PowerConfig cfg;
        BatteryState s;
        s.soc = 0.6;
        const double soc0 = s.soc;
        double integral_wh = 0.0;
        const double nets[] = {-3000.0, 1500.0, -200.0, 800.0, -1200.0, 1999.0};
        for (int rep = 0; rep < 10; ++rep) {
            for (double net : nets) {
                s = battery_step(s, net, 60.0, cfg);
                integral_wh += net * 60.0 / 3600.0;
            }
        }
        REQUIRE_FALSE(s.floor_violated);
        CHECK(cfg.capacity_wh * (s.soc - soc0) == doctest::Approx(integral_wh).epsilon(1e-9));
    }

    TEST_CASE("one cycle per eclipse pass") {
        PowerConfig cfg;
        BatteryState s;
        const int passes = 37;
        for (int n = 0; n < passes; ++n) {
            for (int i = 0; i < 35; ++i) s = battery_step(s, -7300.0, 60.0, cfg);
            for (int i = 0; i < 60; ++i) s = battery_step(s, 2000.0, 60.0, cfg);
        }
        CHECK(s.cycles == passes);
        // Cycles never decrease.
        int prev = s.cycles;
        for (int i = 0; i < 10; ++i) {
            s = battery_step(s, i % 2 ? 100.0 : -100.0, 10.0, cfg);
            CHECK(s.cycles >= prev);
            prev = s.cycles;
        }
    }

    TEST_CASE("eclipse endurance") {
        PowerConfig cfg;
        cfg.thruster_w = 7100.0;
        CHECK(eclipse_endurance(cfg) == doctest::Approx(37.47).epsilon(1e-3));
        CHECK(eclipse_endurance(cfg) >= 35.0);
        PowerConfig small = cfg;
        small.capacity_wh = 4100.0;
        CHECK(eclipse_endurance(small) == doctest::Approx(26.96).epsilon(1e-3));
        CHECK(eclipse_endurance(small) < 35.0);
        PowerConfig idle = cfg;
        idle.thruster_w = idle.bus_w = 0.0;
        CHECK(eclipse_endurance(idle) == kUnboundedMinutes);
        PowerConfig no_dod = cfg;
        no_dod.max_dod = 0.0;
        CHECK(eclipse_endurance(no_dod) == 0.0);
    }

    TEST_CASE("cycle-limited life") {
        PowerConfig cfg;
        CHECK(cycle_limited_life(cfg, 96 * 60.0) == doctest::Approx(66.67).epsilon(1e-3));
        CHECK(cycle_limited_life(cfg, 100 * 60.0) == doctest::Approx(69.44).epsilon(1e-3));
        PowerConfig none = cfg;
        none.cycle_life = 0.0;
        CHECK(cycle_limited_life(none, 96 * 60.0) == 0.0);
        CHECK_THROWS_AS(cycle_limited_life(cfg, 0.0), std::invalid_argument);
    }

    TEST_CASE("single-eclipse sizing check") {
        PowerConfig big;
        const auto ok = simulate_eclipse(big, 7300.0, 35 * 60.0);
        CHECK_FALSE(ok.floor_violated);
        CHECK(ok.min_soc >= 0.20);
        CHECK(ok.final_soc == doctest::Approx(1.0 - 7300.0 * 2100.0 / 3600.0 / 5700.0).epsilon(1e-12));

        PowerConfig small;
        small.capacity_wh = 4100.0;
        const auto bad = simulate_eclipse(small, 7300.0, 35 * 60.0);
        CHECK(bad.floor_violated);
        CHECK(bad.min_soc == doctest::Approx(0.20));
    }

    TEST_CASE("configuration invariants") {
        PowerConfig cfg;
        CHECK_NOTHROW(cfg.validate());
        PowerConfig a = cfg;
        a.max_dod = 1.5;
        CHECK_THROWS_AS(a.validate(), std::invalid_argument);
        PowerConfig b = cfg;
        b.capacity_wh = 0.0;
        CHECK_THROWS_AS(b.validate(), std::invalid_argument);
        PowerConfig c = cfg;
        c.bus_w = -1.0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    }
}
