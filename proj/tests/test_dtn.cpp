#include "deorbit/config.hpp"
#include "deorbit/dtn.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace deorbit;
using namespace deorbit::dtn;

namespace {

LinkModel constant_link(const std::string& name, int from, int to, double snr_db, double rate) {
    LinkModel l;
    l.name = name;
    l.from = from;
    l.to = to;
    l.parametric.mean_db = snr_db;
    l.parametric.amplitude_db = 0.0;
    l.rate_table = {{10.0, rate}};
    return l;
}

Topology chain(const LinkModel& a, const LinkModel& b, std::vector<std::uint64_t> capacity = {}) {
    Topology t;
    t.node_names = {"Primary", "Relay", "Ground"};
    t.links = {a, b};
    t.capacity_bytes = std::move(capacity);
    return t;
}

TrafficModel traffic(std::vector<Flow> flows) {
    TrafficModel tr;
    tr.flows = std::move(flows);
    return tr;
}

DtnRunSpec short_run(double duration_s, double drain_s = 100.0) {
    DtnRunSpec s;
    s.duration_s = duration_s;
    s.drain_s = drain_s;
    return s;
}

const DtnMetrics& default_run() {
    static const DtnMetrics m = [] {
        const config::MissionConfig cfg;
        return run_dtn(cfg.dtn.topology(), cfg.dtn.traffic(), cfg.dtn.run_spec(42));
    }();
    return m;
}

BundleRecord delivered(double created, double latency) {
    BundleRecord r;
    r.created_s = created;
    r.delivered_s = created + latency;
    return r;
}

}  // namespace

TEST_SUITE("link model") {
    TEST_CASE("parametric SNR stays in its band and is constant without amplitude") {
        LinkModel l;
        l.parametric = {20.5, 4.5, 6000.0, 0.0, {}, -10.0};
        for (double t = 0; t < 20000; t += 7.3) {
            const double s = snr_at(l, t);
            REQUIRE(s >= 16.0);
            REQUIRE(s <= 25.0);
        }
        l.parametric.amplitude_db = 0.0;
        CHECK(snr_at(l, 0.0) == 20.5);
        CHECK(snr_at(l, 1234.5) == 20.5);
        CHECK_THROWS_AS(snr_at(l, -1.0), std::invalid_argument);
    }

    TEST_CASE("outage windows mask the SNR") {
        LinkModel l;
        l.parametric = {20.5, 0.0, 6000.0, 0.0, {{100.0, 50.0}}, -10.0};
        CHECK(snr_at(l, 99.9) == 20.5);
        CHECK(snr_at(l, 100.0) == -10.0);
        CHECK(snr_at(l, 149.9) == -10.0);
        CHECK(snr_at(l, 150.0) == 20.5);
    }

    TEST_CASE("free-space loss: doubling distance costs 6.02 dB") {
        LinkModel l;
        l.mode = SnrMode::geometry;
        LinkGeometry g;
        g.from = [](double) { return Vec3(8000, 0, 0); };
        g.to = [](double) { return Vec3(8000, 1000, 0); };
        const double near = snr_at(l, 0.0, &g);
        g.to = [](double) { return Vec3(8000, 2000, 0); };
        const double far = snr_at(l, 0.0, &g);
        CHECK(near - far == doctest::Approx(20 * std::log10(2.0)).epsilon(1e-12));
        CHECK(near - far == doctest::Approx(6.02).epsilon(1e-3));
        CHECK_THROWS_AS(snr_at(l, 0.0), std::invalid_argument);
    }

    TEST_CASE("Earth blocks the line of sight and low elevation masks the ground") {
        LinkModel l;
        l.mode = SnrMode::geometry;
        LinkGeometry g;
        g.from = [](double) { return Vec3(7000, 0, 0); };
        g.to = [](double) { return Vec3(-7000, 0, 0); };
        CHECK(snr_at(l, 0.0, &g) == l.budget.outage_snr_db);

        g.to_is_ground = true;
        g.to = [](double) { return Vec3(6378.137, 0, 0); };
        g.from = [](double) { return Vec3(7800, 0, 0); };
        CHECK(snr_at(l, 0.0, &g) > l.budget.outage_snr_db);
        g.from = [](double) { return Vec3(0, 7800, 0); };
        CHECK(snr_at(l, 0.0, &g) == l.budget.outage_snr_db);
    }

    TEST_CASE("rate table lookup") {
        const config::MissionConfig cfg;
        const LinkModel& rg = cfg.dtn.relay_ground;
        CHECK(rate_from_snr(29.99, rg) == 0.0);
        CHECK(rate_from_snr(-10.0, rg) == 0.0);
        for (double s = 30.0; s <= 38.0; s += 0.1) {
            const double r = rate_from_snr(s, rg);
            REQUIRE(r >= 35000.0);
            REQUIRE(r <= 65000.0);
        }
        double prev = 0.0;
        for (double s = -20.0; s <= 50.0; s += 0.1) {
            const double r = rate_from_snr(s, rg);
            REQUIRE(r >= prev);
            prev = r;
        }
    }

    TEST_CASE("rate tables must increase") {
        LinkModel l = constant_link("x", 0, 1, 20, 100);
        l.rate_table = {{10.0, 100.0}, {9.0, 200.0}};
        CHECK_THROWS_AS(l.validate(), std::invalid_argument);
        l.rate_table = {{10.0, 100.0}, {12.0, 50.0}};
        CHECK_THROWS_AS(l.validate(), std::invalid_argument);
        l.rate_table = {};
        CHECK_THROWS_AS(l.validate(), std::invalid_argument);
    }

    TEST_CASE("rate schedule integrates piecewise rates") {
        LinkModel l = constant_link("x", 0, 1, 20, 100);
        l.parametric.outages = {{10.0, 5.0}};
        const RateSchedule s(l, 100.0, 1.0, nullptr);
        CHECK(s.rate_at(9.5) == 100.0);
        CHECK(s.rate_at(12.0) == 0.0);
        CHECK(s.next_up(12.0) == 15.0);
        CHECK(s.bytes_between(0.0, 20.0) == doctest::Approx(1500.0));
        CHECK(s.completion(9.0, 300.0) == doctest::Approx(17.0));
        CHECK(s.peak_rate() == 100.0);
    }
}

TEST_SUITE("store-and-forward simulation") {
    TEST_CASE("single bundle crosses two hops in size/rate1 + size/rate2") {
        const auto topo = chain(constant_link("a", 0, 1, 20, 500.0), constant_link("b", 1, 2, 20, 250.0));
        const auto m = run_dtn(topo, traffic({{Priority::bulk, 1000.0, 1000, 0.0, false}}), short_run(10.0));
        REQUIRE(m.bundles.size() == 1);
        const auto& b = m.bundles[0];
        REQUIRE(b.delivered_s);
        CHECK(*b.latency() == 1000.0 / 500.0 + 1000.0 / 250.0);
        CHECK(b.hops == 2);
        CHECK(b.hop_arrivals_s == std::vector<double>{2.0, 6.0});
    }

    TEST_CASE("no traffic gives empty metrics") {
        const config::MissionConfig cfg;
        const auto m = run_dtn(cfg.dtn.topology(), traffic({}), short_run(1000.0));
        CHECK(m.bundles.empty());
        CHECK(m.events.empty());
        CHECK(m.counts.generated == 0);
        CHECK(latency_cdf(m.bundles).empty());
        CHECK(m.delivered_within(1.0) == 0.0);
        for (int node = 0; node < 3; ++node) {
            for (const auto& [t, b] : backlog_series(m, node)) CHECK(b == 0);
        }
        for (const auto& p : m.throughput) CHECK(p.bytes_per_s == 0.0);
    }

    TEST_CASE("default scenario conserves bundles and loses none") {
        const auto& m = default_run();
        CHECK(m.conservation_violations == 0);
        CHECK(m.counts.dropped == 0);
        CHECK(m.counts.generated == m.bundles.size());
        CHECK(m.counts.delivered == m.bundles.size());
        CHECK(m.counts.buffered == 0);
        CHECK(m.counts.in_flight == 0);
    }

    TEST_CASE("default scenario delivery and tail") {
        const auto& m = default_run();
        const double within = m.delivered_within(1.0);
        MESSAGE("delivered within 1 s: ", within);
        CHECK(within >= 0.85);
        CHECK(within <= 0.98);

        const auto& pr = m.schedules[0];
        bool tail = false;
        for (const auto& b : m.bundles) {
            const double lat = *b.latency();
            if (pr.rate_at(b.created_s) <= 0 && lat >= 1000.0 && lat <= 4000.0) tail = true;
        }
        CHECK(tail);

        const auto peak = peak_backlog(m, 1);
        MESSAGE("relay peak backlog: ", peak, " B");
        CHECK(peak >= 32500);
        CHECK(peak <= 130000);
    }

    TEST_CASE("strict priority: no bulk starts while safety-critical waits") {
        const auto& m = default_run();
        std::vector<std::array<int, kPriorityCount>> waiting(3, {0, 0, 0});
        std::size_t bulk_starts = 0;
        for (const auto& e : m.events) {
            auto& w = waiting[static_cast<std::size_t>(e.node)];
            const auto p = static_cast<std::size_t>(e.priority);
            if (e.kind == EventKind::enqueue) ++w[p];
            if (e.kind == EventKind::tx_start) {
                --w[p];
                if (e.priority == Priority::bulk) {
                    ++bulk_starts;
                    REQUIRE(w[0] == 0);
                }
                if (e.priority != Priority::safety_critical) REQUIRE(w[0] == 0);
            }
        }
        CHECK(bulk_starts > 0);
    }

    TEST_CASE("FIFO within a priority class") {
        const auto& m = default_run();
        std::map<std::pair<int, int>, std::uint64_t> last;
        for (const auto& e : m.events) {
            if (e.kind != EventKind::tx_start) continue;
            const auto key = std::pair(e.node, static_cast<int>(e.priority));
            if (last.count(key)) REQUIRE(e.bundle > last[key]);
            last[key] = e.bundle;
        }
    }

    TEST_CASE("latency floor, causality and store-and-forward") {
        const auto& m = default_run();
        const double floor_per_byte = 1.0 / m.schedules[0].peak_rate() + 1.0 / m.schedules[1].peak_rate();
        for (const auto& b : m.bundles) {
            REQUIRE(*b.latency() >= static_cast<double>(b.size_bytes) * floor_per_byte - 1e-9);
        }

        std::map<std::uint64_t, double> relay_arrival;
        std::map<int, double> last_end;
        for (const auto& e : m.events) {
            if (e.kind == EventKind::tx_end) {
                REQUIRE(e.t_s >= last_end[e.node]);
                last_end[e.node] = e.t_s;
                if (e.node == 0) relay_arrival[e.bundle] = e.t_s;
            }
            if (e.kind == EventKind::tx_start && e.node == 1) {
                REQUIRE(relay_arrival.count(e.bundle));
                REQUIRE(e.t_s >= relay_arrival[e.bundle]);
            }
        }
    }

    TEST_CASE("no progress during outages; bundles born in an outage wait it out") {
        const auto& m = default_run();
        const config::MissionConfig cfg;
        const auto& w = cfg.dtn.primary_relay.parametric.outages.at(0);
        for (const auto& p : m.throughput) {
            if (p.link == 0 && p.t_s >= w.start_s && p.t_s + 10.0 <= w.start_s + w.duration_s) {
                REQUIRE(p.bytes_per_s == 0.0);
            }
        }
        int inside = 0;
        for (const auto& b : m.bundles) {
            if (b.created_s > w.start_s && b.created_s < w.start_s + w.duration_s) {
                ++inside;
                REQUIRE(*b.latency() >= w.start_s + w.duration_s - b.created_s);
            }
        }
        CHECK(inside > 0);
    }

    TEST_CASE("backlog equals enqueued minus transmitted bytes at every point") {
        const auto& m = default_run();
        std::vector<std::int64_t> replay(3, 0);
        std::size_t bi = 0;
        // After each enqueue/tx_end the next backlog point for that node must match the replay.
        std::vector<std::vector<std::uint64_t>> per_node(3);
        for (const auto& p : m.backlog) per_node[static_cast<std::size_t>(p.node)].push_back(p.bytes);
        std::vector<std::size_t> cursor(3, 1);  // skip the initial zero sample
        for (const auto& e : m.events) {
            const auto n = static_cast<std::size_t>(e.node);
            if (e.kind == EventKind::enqueue) replay[n] += static_cast<std::int64_t>(e.size_bytes);
            else if (e.kind == EventKind::tx_end) replay[n] -= static_cast<std::int64_t>(e.size_bytes);
            else continue;
            REQUIRE(cursor[n] < per_node[n].size());
            REQUIRE(static_cast<std::int64_t>(per_node[n][cursor[n]++]) == replay[n]);
            ++bi;
        }
        for (std::size_t n = 0; n < 3; ++n) CHECK(cursor[n] == per_node[n].size());
        CHECK(bi > 0);
        // Drained by the end of the run.
        CHECK(backlog_series(m, 1).back().second == 0);
        CHECK_THROWS_AS(backlog_series(m, 7), std::invalid_argument);
    }

    TEST_CASE("finite buffers drop with a recorded reason") {
        const auto topo = chain(constant_link("a", 0, 1, 20, 1000.0), constant_link("b", 1, 2, 20, 100.0),
                                {0, 5000, 0});
        const auto m = run_dtn(topo, traffic({{Priority::bulk, 1.0, 1000, 0.0, false}}), short_run(60.0, 10.0));
        CHECK(m.counts.dropped > 0);
        CHECK(m.conservation_violations == 0);
        std::size_t flagged = 0;
        for (const auto& b : m.bundles) {
            if (b.dropped) {
                ++flagged;
                CHECK(b.drop_reason == "buffer-overflow@Relay");
                CHECK_FALSE(b.delivered_s);
            }
        }
        CHECK(flagged == m.counts.dropped);
        CHECK(m.counts.generated == m.counts.delivered + m.counts.buffered + m.counts.in_flight + m.counts.dropped);
    }

    TEST_CASE("identical inputs reproduce identical results") {
        const config::MissionConfig cfg;
        auto tr = cfg.dtn.traffic();
        for (auto& f : tr.flows) f.poisson = true;
        auto spec = cfg.dtn.run_spec(7);
        spec.duration_s = 3600.0;
        const auto a = run_dtn(cfg.dtn.topology(), tr, spec);
        const auto b = run_dtn(cfg.dtn.topology(), tr, spec);
        REQUIRE(a.bundles.size() == b.bundles.size());
        for (std::size_t i = 0; i < a.bundles.size(); ++i) {
            REQUIRE(a.bundles[i].created_s == b.bundles[i].created_s);
            REQUIRE(a.bundles[i].delivered_s == b.bundles[i].delivered_s);
        }
        REQUIRE(a.backlog.size() == b.backlog.size());
        for (std::size_t i = 0; i < a.backlog.size(); ++i) REQUIRE(a.backlog[i].bytes == b.backlog[i].bytes);
        spec.seed = 8;
        const auto c = run_dtn(cfg.dtn.topology(), tr, spec);
        CHECK(c.bundles.front().created_s != a.bundles.front().created_s);
    }

    TEST_CASE("invalid topologies are rejected") {
        const auto a = constant_link("a", 0, 1, 20, 100.0);
        auto loop = constant_link("b", 1, 0, 20, 100.0);
        CHECK_THROWS_AS(run_dtn(chain(a, loop), traffic({}), short_run(10.0)), std::invalid_argument);
        CHECK_THROWS_AS(run_dtn(chain(a, constant_link("b", 1, 2, 20, 1)), traffic({}), short_run(0.0)),
                        std::invalid_argument);
    }
}

TEST_SUITE("delivery statistics") {
    TEST_CASE("latency CDF of {1, 1, 2}") {
        const std::vector<BundleRecord> r{delivered(0, 1), delivered(5, 1), delivered(3, 2)};
        const auto cdf = latency_cdf(r);
        REQUIRE(cdf.size() == 2);
        CHECK(cdf[0].first == 1.0);
        CHECK(cdf[0].second == doctest::Approx(2.0 / 3.0));
        CHECK(cdf[1].first == 2.0);
        CHECK(cdf[1].second == 1.0);
    }

    TEST_CASE("CDF ends at the delivered fraction") {
        std::vector<BundleRecord> r{delivered(0, 1), delivered(0, 3), BundleRecord{}, BundleRecord{}};
        const auto cdf = latency_cdf(r);
        CHECK(cdf.back().second == 0.5);
        const auto& m = default_run();
        const auto full = latency_cdf(m.bundles);
        for (std::size_t i = 1; i < full.size(); ++i) REQUIRE(full[i].second >= full[i - 1].second);
        CHECK(full.back().second <= 1.0);
    }

    TEST_CASE("histogram bins") {
        const auto h = histogram({1.0, 1.0, 2.0}, 1.0, 3.0);
        REQUIRE(h.size() == 3);
        CHECK(h[0].count == 0);
        CHECK(h[1].count == 2);
        CHECK(h[2].count == 1);
        CHECK_THROWS_AS(histogram({}, 0.0, 1.0), std::invalid_argument);
    }

    TEST_CASE("periodic and Poisson arrivals") {
        GaussianRng rng(3);
        const auto periodic = flow_arrivals({Priority::bulk, 10.0, 1, 2.5, false}, 50.0, rng);
        CHECK(periodic == std::vector<double>{2.5, 12.5, 22.5, 32.5, 42.5});
        const auto poisson = flow_arrivals({Priority::bulk, 10.0, 1, 0.0, true}, 1e6, rng);
        CHECK(static_cast<double>(poisson.size()) == doctest::Approx(1e5).epsilon(0.02));
    }

    TEST_CASE("priority names round-trip") {
        for (auto p : {Priority::safety_critical, Priority::metadata, Priority::bulk}) {
            CHECK(priority_from_string(to_string(p)) == p);
        }
        CHECK_THROWS_AS(priority_from_string("urgent"), std::invalid_argument);
    }
}
